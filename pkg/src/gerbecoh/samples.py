"""Seeded random instances: modules, sites, isogeny data and towers.

Everything takes a ``numpy.random.Generator`` so test runs and CLI runs with
``--seed`` are reproducible.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .gmod import FinGroup, GammaModule, Subgroup, cyclic_group
from .sites import PlaceSystem, validate_site
from .zlat import IntMatrix, hstack


def random_unimodular(n: int, rng: np.random.Generator, steps: int = 6) -> tuple[IntMatrix, IntMatrix]:
    """A random unimodular matrix and its inverse, built from elementary moves."""
    u = np.eye(n, dtype=object)
    ui = np.eye(n, dtype=object)
    for _ in range(steps if n > 1 else 0):
        i, j = rng.choice(n, 2, replace=False)
        k = int(rng.integers(-2, 3))
        # u <- E u with E = I + k e_ij, and ui <- ui E^{-1}
        u[i] = u[i] + k * u[j]
        ui[:, j] = ui[:, j] - k * ui[:, i]
    for i in range(n):
        if rng.random() < 0.3:
            u[i] = -u[i]
            ui[:, i] = -ui[:, i]
    return IntMatrix.from_rows(u.tolist(), n), IntMatrix.from_rows(ui.tolist(), n)


def sign_characters(group: FinGroup) -> list[tuple[int, ...]]:
    """All homomorphisms to {1, -1}, as value tuples."""
    out = [tuple(1 for _ in group.elements)]
    for h in group.subgroups():
        if 2 * h.order == group.order:
            out.append(tuple(1 if g in h else -1 for g in group.elements))
    return out


def signed_permutation_action(group: FinGroup, sub: Subgroup, character: tuple[int, ...]) -> list[list[list[int]]]:
    """Action on the cosets ``g sub`` twisted by a sign character."""
    cosets = sub.left_cosets()
    where = {g: i for i, c in enumerate(cosets) for g in c}
    k = len(cosets)
    mats = []
    for g in group.elements:
        m = [[0] * k for _ in range(k)]
        for j, c in enumerate(cosets):
            m[where[group.mul(g, c[0])]][j] = character[g]
        mats.append(m)
    return mats


def random_lattice_action(group: FinGroup, rng: np.random.Generator, max_rank: int = 3) -> list[IntMatrix]:
    """Action matrices of a random signed permutation lattice, in a random basis."""
    subs = group.subgroups()
    chars = sign_characters(group)
    blocks = []
    rank = 0
    target = int(rng.integers(1, max_rank + 1))
    while rank < target:
        fitting = [h for h in subs if group.order // h.order <= target - rank]
        h = fitting[int(rng.integers(len(fitting)))]
        ch = chars[int(rng.integers(len(chars)))]
        blocks.append(signed_permutation_action(group, h, ch))
        rank += group.order // h.order
    mats = []
    u, ui = random_unimodular(rank, rng)
    for g in group.elements:
        m = [[0] * rank for _ in range(rank)]
        off = 0
        for b in blocks:
            k = len(b[g])
            for i in range(k):
                m[off + i][off:off + k] = b[g][i]
            off += k
        mats.append(u @ IntMatrix.from_rows(m, rank) @ ui)
    return mats


def random_finite_module(group: FinGroup, rng: np.random.Generator, max_rank: int = 3,
                         max_exponent: int = 9, exponent: int | None = None) -> GammaModule:
    """``L / (e L + Z[Γ] v)`` for a random signed permutation lattice ``L``.

    ``e`` is ``exponent`` when given, otherwise drawn from ``2..max_exponent``.
    """
    action = random_lattice_action(group, rng, max_rank)
    n = action[0].rows
    e = exponent if exponent is not None else int(rng.integers(2, max_exponent + 1))
    rel = IntMatrix.diagonal([e] * n)
    if rng.random() < 0.5:
        v = [int(x) for x in rng.integers(-2, 3, n)]
        orbit = IntMatrix.from_columns([a @ v for a in action], n)
        rel = hstack(rel, orbit)
    return GammaModule(group, n, rel, tuple(action))


def random_lattice_module(group: FinGroup, rng: np.random.Generator, max_rank: int = 3) -> GammaModule:
    return GammaModule.lattice(group, random_lattice_action(group, rng, max_rank))


def random_cyclic_module(order: int, rng: np.random.Generator, max_rank: int = 3, max_exponent: int = 9):
    return random_finite_module(cyclic_group(order), rng, max_rank, max_exponent)


# sites -----------------------------------------------------------------------


def coset_site(group: FinGroup, stabilizers: Sequence[Sequence[int]], section_offsets: Sequence[int] | None = None,
               flags: dict | None = None) -> PlaceSystem:
    """Site with one rational place per listed subgroup ``H``, whose places are the cosets ``gH``.

    The section place over the i-th rational place is the coset of
    ``section_offsets[i]`` (default: ``H`` itself).
    """
    fiber, cosets_all, rational = [], [], []
    for v, h in enumerate(stabilizers):
        rational.append(f"v{v + 1}")
        for c in Subgroup(group, tuple(h)).left_cosets():
            fiber.append(v)
            cosets_all.append(c)
    counters = {}
    labels = []
    for v in fiber:
        counters[v] = counters.get(v, 0) + 1
        labels.append(f"w{v + 1}_{counters[v]}")
    where = {}
    for i, c in enumerate(cosets_all):
        for g in c:
            where[(fiber[i], g)] = i
    action = []
    for g in group.elements:
        action.append(tuple(where[(fiber[i], group.mul(g, c[0]))] for i, c in enumerate(cosets_all)))
    offsets = section_offsets or [0] * len(stabilizers)
    section = tuple(where[(v, offsets[v])] for v in range(len(stabilizers)))
    return PlaceSystem(group, tuple(rational), tuple(labels), tuple(fiber), tuple(action), section,
                       flags if flags is not None else {"ideal_class_support": True, "ramified_in_S": True})


def random_site(group: FinGroup, rng: np.random.Generator, max_places: int = 8,
                require_condition4: bool = True, min_rational: int = 2) -> PlaceSystem:
    """Random coset site with at most ``max_places`` places upstairs."""
    subs = group.subgroups()
    while True:
        stabs, offsets = [], []
        total = 0
        want = int(rng.integers(min_rational, max_places + 1))
        while len(stabs) < want:
            fitting = [h for h in subs if group.order // h.order <= max_places - total]
            if not fitting:
                break
            h = fitting[int(rng.integers(len(fitting)))]
            stabs.append(h.elements)
            offsets.append(int(rng.integers(group.order)))
            total += group.order // h.order
        if len(stabs) < min_rational:
            continue
        site = coset_site(group, stabs, offsets)
        if not require_condition4 or validate_site(site).condition4:
            return site
        if total < max_places:
            # a place with full decomposition group fixes everything
            return coset_site(group, stabs + [tuple(group.elements)], offsets + [0])


# isogeny data and towers ---------------------------------------------------------


def random_isogeny_datum(group: FinGroup, rng: np.random.Generator, max_rank: int = 2, max_index: int = 4):
    """``Ȳ`` a random signed permutation lattice; ``Y = mȲ + Z[Γ]v`` for random ``m`` and ``v``."""
    from .tn import IsogenyDatum
    from .zlat import lattice_basis

    action = random_lattice_action(group, rng, max_rank)
    r = action[0].rows
    m = int(rng.integers(1, max_index + 1))
    gens = IntMatrix.diagonal([m] * r)
    if m > 1 and rng.random() < 0.7:
        v = [int(x) for x in rng.integers(-2, 3, r)]
        gens = hstack(gens, IntMatrix.from_columns([a @ v for a in action], r))
    y = lattice_basis(gens)
    return IsogenyDatum(group, GammaModule.lattice(group, action), y)


def quotient_group(group: FinGroup, normal: Sequence[int]) -> tuple[FinGroup, tuple[int, ...]]:
    """``group / normal`` and the quotient map; cosets are numbered by their least element."""
    sub = Subgroup(group, tuple(normal))
    cosets = sorted(sub.left_cosets(), key=min)
    where = {g: i for i, c in enumerate(cosets) for g in c}
    if any(where[group.mul(g, h)] != where[g] for g in group.elements for h in sub.elements) or \
            any(where[group.mul(h, g)] != where[g] for g in group.elements for h in sub.elements):
        raise ValueError("subgroup is not normal")
    table = [[where[group.mul(c[0], d[0])] for d in cosets] for c in cosets]
    return FinGroup.from_table(table), tuple(where[g] for g in group.elements)


def coset_tower(group: FinGroup, normal: Sequence[int], stabilizers: Sequence[Sequence[int]],
                section_offsets: Sequence[int] | None = None, lower_count: int | None = None):
    """Tower whose upper site is a coset site of ``group`` and whose lower site is its image mod ``normal``.

    Only the first ``lower_count`` rational places (default: all) are kept
    at the lower level.
    """
    from .sites import Tower

    quot, q = quotient_group(group, normal)
    offsets = list(section_offsets or [0] * len(stabilizers))
    k = len(stabilizers) if lower_count is None else lower_count
    upper = coset_site(group, stabilizers, offsets)
    low_stabs = [sorted({q[h] for h in stab}) for stab in stabilizers[:k]]
    lower = coset_site(quot, low_stabs, [q[o] for o in offsets[:k]])
    place_map = []
    for u in range(upper.place_count):
        v = upper.fiber[u]
        if v >= k:
            place_map.append(None)
            continue
        # u is the coset g·H of the v-th stabilizer; find g as the transporter from the coset of 1
        base = next(x for x in range(upper.place_count) if upper.fiber[x] == v)
        g = next(g for g in group.elements if upper.act(g, base) == u)
        lbase = next(x for x in range(lower.place_count) if lower.fiber[x] == v)
        place_map.append(lower.act(q[g], lbase))
    return Tower(lower, upper, q, tuple(place_map))


def random_tower(group: FinGroup, rng: np.random.Generator, max_places: int = 8):
    """Random coset tower over ``group`` and a random proper quotient passing the fixed-point condition."""
    from .sites import validate_tower

    normals = [h for h in group.subgroups()
               if all(group.mul(group.mul(g, x), group.inv(g)) in h.elements for g in group.elements
                      for x in h.elements)]
    subs = group.subgroups()
    while True:
        normal = normals[int(rng.integers(len(normals)))]
        stabs, offsets, total = [], [], 0
        want = int(rng.integers(2, max_places + 1))
        while len(stabs) < want:
            fitting = [h for h in subs if group.order // h.order <= max_places - total]
            if not fitting:
                break
            h = fitting[int(rng.integers(len(fitting)))]
            stabs.append(h.elements)
            offsets.append(int(rng.integers(group.order)))
            total += group.order // h.order
        if len(stabs) < 2:
            continue
        if not any(len(s) == group.order for s in stabs):
            stabs.append(tuple(group.elements))
            offsets.append(0)
        lower_count = int(rng.integers(1, len(stabs) + 1))
        # keep the full-stabilizer place at the lower level so both levels satisfy the fixed-point condition
        full = next(i for i, s in enumerate(stabs) if len(s) == group.order)
        stabs[0], stabs[full] = stabs[full], stabs[0]
        offsets[0], offsets[full] = offsets[full], offsets[0]
        t = coset_tower(group, normal.elements, stabs, offsets, lower_count)
        if validate_tower(t).ok:
            return t
