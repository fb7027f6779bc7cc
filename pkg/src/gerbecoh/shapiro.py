"""Coset sections, induced modules and the explicit Shapiro cochain map.

Homogeneous k-cochains are dicts from (k+1)-tuples of group elements to
ambient vectors, defined on every tuple.  Cochains of the subgroup Δ are
keyed by elements of the parent group; a Δ-module is a :class:`GammaModule`
over ``Δ.as_group``, whose element ``i`` stands for ``Δ.elements[i]``.

For a section ``s`` of ``Γ -> Δ\\Γ`` with ``s(Δ) = 1`` the retraction is
``r(γ) = γ s(γ)⁻¹``.  An induced module element ``f`` (a Δ-equivariant map
``Γ -> X``) is stored through its values at the section representatives, and
``(γ f)(a) = f(a γ)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .gmod import FinGroup, FiniteCohomology, GammaModule, Subgroup, coboundary
from .samples import quotient_group
from .zlat import IntMatrix, block_diagonal


class SectionError(ValueError):
    """Not a normalized section, or not compatible with the quotient."""


class CochainError(ValueError):
    """A cochain without the required equivariance or cocycle property."""


# sections ----------------------------------------------------------------------


@dataclass(frozen=True)
class CosetSection:
    """A normalized transversal of the right cosets ``Δγ``.

    ``reps[i]`` represents ``subgroup.right_cosets()[i]``; the coset of the
    identity comes first and is represented by the identity.  ``lower`` is
    the section at the quotient level when the section was built for a
    two-step tower.
    """

    group: FinGroup
    subgroup: Subgroup
    reps: tuple[int, ...]
    normal: tuple[int, ...] | None = None
    lower: "CosetSection | None" = None

    def __post_init__(self):
        cosets = self.subgroup.right_cosets()
        if len(self.reps) != len(cosets):
            raise SectionError("need one representative per coset")
        for c, a in zip(cosets, self.reps):
            if a not in c:
                raise SectionError(f"representative {a} is not in the coset {list(c)}")
        if self.reps[0] != 0:
            raise SectionError("the section must send the trivial coset to the identity")

    @cached_property
    def coset_index(self) -> tuple[int, ...]:
        where = {}
        for i, c in enumerate(self.subgroup.right_cosets()):
            for g in c:
                where[g] = i
        return tuple(where[g] for g in self.group.elements)

    @property
    def index(self) -> int:
        return len(self.reps)

    def section(self, g: int) -> int:
        return self.reps[self.coset_index[g]]

    def retraction(self, g: int) -> int:
        G = self.group
        return G.mul(g, G.inv(self.section(g)))

    @cached_property
    def r_table(self) -> tuple[int, ...]:
        return tuple(self.retraction(g) for g in self.group.elements)

    def check(self) -> list[str]:
        """Violations of the section/retraction identities (empty when fine)."""
        G, D = self.group, set(self.subgroup.elements)
        out = []
        if self.r_table[0] != 0:
            out.append("r(1) is not 1")
        for g in G.elements:
            if self.r_table[g] not in D:
                out.append(f"r({g}) is not in the subgroup")
            if G.mul(self.r_table[g], self.section(g)) != g:
                out.append(f"{g} != r({g}) s({g})")
            for d in D:
                if self.r_table[G.mul(d, g)] != G.mul(d, self.r_table[g]):
                    out.append(f"r({d}·{g}) != {d}·r({g})")
        return out

    def compatible_with(self, normal: Sequence[int]) -> bool:
        """``s(a)⁻¹ s(ab)`` lies in ``normal`` for all ``a`` and all ``b`` in ``normal``."""
        G = self.group
        n = set(normal)
        return all(G.mul(G.inv(self.section(a)), self.section(G.mul(a, b))) in n
                   for a in G.elements for b in n)

    def to_json(self) -> dict:
        out = {"subgroup": list(self.subgroup.elements), "representatives": list(self.reps),
               "retraction": list(self.r_table)}
        if self.lower is not None:
            out["normal"] = list(self.normal)
            out["lower"] = self.lower.to_json()
        return out


def _transversal(sub: Subgroup, rng: np.random.Generator | None) -> tuple[int, ...]:
    reps = []
    for c in sub.right_cosets():
        if 0 in c:
            reps.append(0)
        elif rng is not None:
            reps.append(c[int(rng.integers(len(c)))])
        else:
            reps.append(c[0])
    return tuple(reps)


def build_section(group: FinGroup, subgroup: Subgroup | Sequence[int], normal: Sequence[int] | None = None,
                  rng: np.random.Generator | None = None) -> CosetSection:
    """A normalized section; with ``normal`` it is inflated level by level.

    For a normal subgroup ``K`` the section of ``Δ K / K`` in ``Γ / K`` is
    chosen first; its values are lifted (the identity to the identity) and
    multiplied on the left by representatives of ``(Δ ∩ K) \\ K``.
    """
    sub = subgroup if isinstance(subgroup, Subgroup) else Subgroup(group, tuple(subgroup))
    if normal is None:
        return CosetSection(group, sub, _transversal(sub, rng))
    quot, q = quotient_group(group, normal)
    low_sub = Subgroup(quot, tuple(sorted({q[d] for d in sub.elements})))
    lower = CosetSection(quot, low_sub, _transversal(low_sub, rng))
    lifts = []
    for a in lower.reps:
        if a == 0:
            lifts.append(0)
        else:
            cands = [g for g in group.elements if q[g] == a]
            lifts.append(cands[int(rng.integers(len(cands)))] if rng is not None else cands[0])
    inner = Subgroup(group, tuple(sorted(set(sub.elements) & set(normal))))
    k_group = Subgroup(group, tuple(sorted(normal)))
    # right cosets of Δ ∩ K inside K
    seen, bs = set(), []
    for b in k_group.elements:
        if b in seen:
            continue
        coset = {group.mul(d, b) for d in inner.elements}
        seen |= coset
        bs.append(0 if 0 in coset else (sorted(coset)[int(rng.integers(len(coset)))] if rng is not None
                                         else min(coset)))
    candidates = [group.mul(b, a) for a in lifts for b in bs]
    cosets = sub.right_cosets()
    where = {g: i for i, c in enumerate(cosets) for g in c}
    reps = [None] * len(cosets)
    for g in candidates:
        i = where[g]
        if reps[i] is not None:
            raise SectionError("lifted representatives hit a coset twice")
        reps[i] = g
    if any(x is None for x in reps):
        raise SectionError("lifted representatives miss a coset")
    sec = CosetSection(group, sub, tuple(reps), tuple(sorted(normal)), lower)
    if not sec.compatible_with(normal):
        raise SectionError("section is not inflated from the quotient")
    return sec


# induced modules -------------------------------------------------------------------


@dataclass(frozen=True)
class InducedModule:
    """``Ind_Δ^Γ X``, coordinatized by the values at the representatives of ``sec``."""

    sec: CosetSection
    base: GammaModule

    def __post_init__(self):
        if self.base.group.order != self.sec.subgroup.order:
            raise CochainError("base module is not a module for the subgroup")

    @cached_property
    def position(self) -> dict[int, int]:
        return {d: i for i, d in enumerate(self.sec.subgroup.elements)}

    @property
    def block(self) -> int:
        return self.base.ambient_rank

    @property
    def rank(self) -> int:
        return self.sec.index * self.block

    def act_base(self, delta: int, x: Sequence[int]) -> list[int]:
        return self.base.act(self.position[delta], x)

    @cached_property
    def module(self) -> GammaModule:
        G, sec = self.sec.group, self.sec
        n, m = self.block, sec.index
        mats = []
        for g in G.elements:
            rows = [[0] * (m * n) for _ in range(m * n)]
            for i, a in enumerate(sec.reps):
                ag = G.mul(a, g)
                j = sec.coset_index[ag]
                blk = self.base.action[self.position[sec.r_table[ag]]]
                for x in range(n):
                    rows[i * n + x][j * n:(j + 1) * n] = blk.row(x)
            mats.append(IntMatrix.from_rows(rows, m * n))
        rel = block_diagonal([self.base.relations] * m) if self.base.relations.cols else IntMatrix.zeros(m * n, 0)
        return GammaModule(G, m * n, rel, tuple(mats))

    def evaluate(self, f: Sequence[int], a: int) -> list[int]:
        """``f(a) = r(a) · f(s(a))``."""
        i = self.sec.coset_index[a]
        n = self.block
        return self.act_base(self.sec.r_table[a], list(f[i * n:(i + 1) * n]))

    def from_function(self, values: Mapping[int, Sequence[int]] | Sequence[Sequence[int]]) -> list[int]:
        """Coordinates of a Δ-equivariant function given by its values on all of Γ."""
        out = []
        for a in self.sec.reps:
            out += list(values[a])
        return out


# homogeneous cochains ---------------------------------------------------------------


def all_tuples(elements: Sequence[int], k: int) -> list[tuple[int, ...]]:
    return list(itertools.product(elements, repeat=k + 1))


def homogeneous_differential(c: Mapping, elements: Sequence[int], k: int, rank: int) -> dict:
    """``(dc)(σ_0..σ_{k+1}) = Σ (-1)^i c(.., σ̂_i, ..)``."""
    out = {}
    for t in all_tuples(elements, k + 1):
        acc = [0] * rank
        for i in range(k + 2):
            val = c[t[:i] + t[i + 1:]]
            if i % 2:
                acc = [a - b for a, b in zip(acc, val)]
            else:
                acc = [a + b for a, b in zip(acc, val)]
        out[t] = acc
    return out


def to_homogeneous(module: GammaModule, phi: Mapping, k: int) -> dict:
    """``c(σ_0..σ_k) = σ_0 φ(σ_0⁻¹σ_1, .., σ_{k-1}⁻¹σ_k)``; ``φ`` may omit zero values."""
    G = module.group
    n = module.ambient_rank
    out = {}
    for t in all_tuples(G.elements, k):
        key = tuple(G.mul(G.inv(t[i]), t[i + 1]) for i in range(k))
        val = phi.get(key)
        out[t] = module.act(t[0], list(val)) if val is not None else [0] * n
    return out


def to_inhomogeneous(c: Mapping, k: int, group: FinGroup) -> dict:
    """``φ(g_1..g_k) = c(1, g_1, g_1 g_2, ..)``."""
    out = {}
    for t in itertools.product(group.elements, repeat=k):
        key = [0]
        for g in t:
            key.append(group.mul(key[-1], g))
        out[t] = list(c[tuple(key)])
    return out


@dataclass(frozen=True)
class SubgroupCochains:
    """Bookkeeping for homogeneous cochains of Δ keyed by parent-group elements."""

    group: FinGroup
    subgroup: Subgroup
    base: GammaModule

    @cached_property
    def position(self) -> dict[int, int]:
        return {d: i for i, d in enumerate(self.subgroup.elements)}

    def act(self, d: int, x: Sequence[int]) -> list[int]:
        return self.base.act(self.position[d], x)

    def from_positions(self, phi: Mapping) -> dict:
        """Relabel an inhomogeneous cochain of ``Δ.as_group`` by parent elements."""
        els = self.subgroup.elements
        return {tuple(els[i] for i in key): v for key, v in phi.items()}

    def to_positions(self, phi: Mapping) -> dict:
        return {tuple(self.position[g] for g in key): v for key, v in phi.items()}

    def homogeneous(self, phi: Mapping, k: int) -> dict:
        """Homogeneous form of an inhomogeneous Δ-cochain keyed by parent elements."""
        G = self.group
        els = list(self.subgroup.elements)
        n = self.base.ambient_rank
        out = {}
        for t in all_tuples(els, k):
            key = tuple(G.mul(G.inv(t[i]), t[i + 1]) for i in range(k))
            val = phi.get(key)
            out[t] = self.act(t[0], list(val)) if val is not None else [0] * n
        return out

    def inhomogeneous(self, c: Mapping, k: int) -> dict:
        G = self.group
        out = {}
        for t in itertools.product(self.subgroup.elements, repeat=k):
            key = [0]
            for g in t:
                key.append(G.mul(key[-1], g))
            out[t] = list(c[tuple(key)])
        return out

    def differential(self, c: Mapping, k: int) -> dict:
        return homogeneous_differential(c, self.subgroup.elements, k, self.base.ambient_rank)

    def is_equivariant(self, c: Mapping) -> bool:
        G = self.group
        for t, v in c.items():
            for d in self.subgroup.elements:
                if not self.base.equal(c[tuple(G.mul(d, x) for x in t)], self.act(d, v)):
                    return False
        return True

    def random_cochain(self, k: int, rng: np.random.Generator, bound: int = 5) -> dict:
        """A random Δ-equivariant homogeneous k-cochain."""
        n = self.base.ambient_rank
        phi = {t: [int(x) for x in rng.integers(-bound, bound + 1, n)]
               for t in itertools.product(self.subgroup.elements, repeat=k)}
        return self.homogeneous(phi, k)


def shapiro_cochain(c: Mapping, k: int, sec: CosetSection, ind: InducedModule, check: bool = True,
                    cochains: SubgroupCochains | None = None) -> dict:
    """``S(c)(σ_0..σ_k)(a) = r(a) c(r(a)⁻¹ r(aσ_0), .., r(a)⁻¹ r(aσ_k))``, in ``ind`` coordinates.

    ``sec`` supplies ``r``; ``ind`` supplies the coordinates (the values at
    its own representatives), so two sections can share one induced module.
    """
    G = sec.group
    if check:
        sc = cochains or SubgroupCochains(G, sec.subgroup, ind.base)
        if not sc.is_equivariant(c):
            raise CochainError("input cochain is not equivariant for the subgroup")
    r = sec.r_table
    out = {}
    for t in all_tuples(G.elements, k):
        val = []
        for a in ind.sec.reps:
            ra = r[a]
            ra_inv = G.inv(ra)
            args = tuple(G.mul(ra_inv, r[G.mul(a, s)]) for s in t)
            val += ind.act_base(ra, c[args])
        out[t] = val
    return out


def evaluate_at_identity(ind: InducedModule, c: Mapping, subgroup: Subgroup, k: int) -> dict:
    """Restrict a Γ-cochain to Δ and evaluate at 1 (the first block)."""
    n = ind.block
    first = ind.sec.coset_index[0]
    return {t: list(c[t][first * n:(first + 1) * n]) for t in all_tuples(subgroup.elements, k)}


# verification -------------------------------------------------------------------------


def _cochains_equal(module: GammaModule, c1: Mapping, c2: Mapping) -> bool:
    return all(module.equal(c1[t], c2[t]) for t in c1)


def _is_gamma_equivariant(ind: InducedModule, c: Mapping) -> bool:
    G = ind.sec.group
    m = ind.module
    for t, v in c.items():
        for g in G.elements:
            if not m.equal(c[tuple(G.mul(g, x) for x in t)], m.act(g, v)):
                return False
    return True


@dataclass(frozen=True)
class ShapiroReport:
    chain_map: bool
    section_identity: bool
    equivariant: bool
    orders: Mapping[int, tuple[int, int, int]]
    samples: int

    @property
    def bijective(self) -> bool:
        return all(a == b == c for a, b, c in self.orders.values())

    @property
    def ok(self) -> bool:
        return self.chain_map and self.section_identity and self.equivariant and self.bijective

    def to_json(self) -> dict:
        return {
            "chain_map": self.chain_map,
            "section_identity": self.section_identity,
            "equivariant": self.equivariant,
            "cohomology": {str(k): {"subgroup_order": a, "induced_order": b, "image_order": c, "bijective": a == b == c}
                           for k, (a, b, c) in sorted(self.orders.items())},
            "samples": self.samples,
            "ok": self.ok,
        }


def shapiro_check(sec: CosetSection, base: GammaModule, rng: np.random.Generator | None = None,
                  samples: int = 2, degrees: Sequence[int] = (1, 2), chain_degrees: Sequence[int] = (0, 1),
                  bound: int = 12) -> ShapiroReport:
    """Check the cochain identities on random cochains and bijectivity on cohomology."""
    rng = rng if rng is not None else np.random.default_rng(0)
    ind = InducedModule(sec, base)
    sc = SubgroupCochains(sec.group, sec.subgroup, base)
    G = sec.group
    chain_ok = section_ok = equiv_ok = True
    for k in chain_degrees:
        for _ in range(samples):
            c = sc.random_cochain(k, rng)
            s = shapiro_cochain(c, k, sec, ind, check=False)
            ds = homogeneous_differential(s, G.elements, k, ind.rank)
            sd = shapiro_cochain(sc.differential(c, k), k + 1, sec, ind, check=False)
            chain_ok = chain_ok and ds == sd
            section_ok = section_ok and evaluate_at_identity(ind, s, sec.subgroup, k) == c
            equiv_ok = equiv_ok and _is_gamma_equivariant(ind, s)
    orders = {}
    if degrees:
        fd = FiniteCohomology(base, bound)
        fg = FiniteCohomology(ind.module, bound)
        for k in degrees:
            images = []
            for z in fd.cocycle_generators(k):
                hz = sc.homogeneous(sc.from_positions(z), k)
                s = shapiro_cochain(hz, k, sec, ind, check=False)
                images.append(to_inhomogeneous(s, k, G))
            orders[k] = (fd.order(k), fg.order(k), fg.class_span_order(images, k))
    return ShapiroReport(chain_ok, section_ok, equiv_ok, orders, samples)


# two sections ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Sh4Result:
    cochain: dict
    path: str
    verified: bool
    formula_verified: bool

    def to_json(self, group: FinGroup) -> dict:
        return {"path": self.path, "verified": self.verified, "formula_verified": self.formula_verified,
                "cochain": {",".join(map(str, t)): v for t, v in sorted(self.cochain.items()) if any(v)}}


def _prism_candidate(z: Mapping, sec: CosetSection, sec_bar: CosetSection, ind: InducedModule) -> dict:
    """``c(σ_0,σ_1)(a) = z(r(aσ_0), r(aσ_1), r̄(aσ_1)) - z(r(aσ_0), r̄(aσ_0), r̄(aσ_1))``."""
    G = sec.group
    r, rb = sec.r_table, sec_bar.r_table
    out = {}
    for t in all_tuples(G.elements, 1):
        val = []
        for a in ind.sec.reps:
            x0, x1 = G.mul(a, t[0]), G.mul(a, t[1])
            first = z[(r[x0], r[x1], rb[x1])]
            second = z[(r[x0], rb[x0], rb[x1])]
            val += [p - q for p, q in zip(first, second)]
        out[t] = val
    return out


def _solve_difference(ind: InducedModule, diff: Mapping, bound: int) -> dict | None:
    """A homogeneous 1-cochain with differential ``diff`` (a homogeneous 2-cocycle)."""
    G = ind.sec.group
    m = ind.module
    phi = to_inhomogeneous(diff, 2, G)
    base = phi[(0, 0)]
    # subtracting the coboundary of the constant cochain φ(1,1) normalizes φ
    const = {(g,): list(base) for g in G.elements}
    d_const = coboundary(m, const, 1)
    normalized = {t: [a - b for a, b in zip(v, d_const[t])] for t, v in phi.items()}
    fc = FiniteCohomology(m, bound)
    b = fc.solve_coboundary(normalized, 2)
    if b is None:
        return None
    total = {(g,): list(const[(g,)]) for g in G.elements}
    for key, v in b.items():
        total[key] = [x + y for x, y in zip(total[key], v)]
    return to_homogeneous(m, total, 1)


def sh4_cochain(z: Mapping, sec: CosetSection, sec_bar: CosetSection, base: GammaModule,
                bound: int = 12, try_formula: bool = True) -> Sh4Result:
    """A 1-cochain ``c`` with ``dc = S(z) - S̄(z)`` for a homogeneous 2-cocycle ``z`` of Δ.

    The closed-form candidate is tried first and verified; otherwise the
    coboundary equation is solved in the induced module.
    """
    if sec.subgroup.elements != sec_bar.subgroup.elements or sec.group.table != sec_bar.group.table:
        raise SectionError("the two sections belong to different subgroups")
    ind = InducedModule(sec, base)
    sc = SubgroupCochains(sec.group, sec.subgroup, base)
    if not sc.is_equivariant(z):
        raise CochainError("input cochain is not equivariant for the subgroup")
    if not all(base.is_zero(v) for v in sc.differential(z, 2).values()):
        raise CochainError("input is not a 2-cocycle")
    G = sec.group
    s1 = shapiro_cochain(z, 2, sec, ind, check=False)
    s2 = shapiro_cochain(z, 2, sec_bar, ind, check=False)
    diff = {t: [a - b for a, b in zip(s1[t], s2[t])] for t in s1}
    m = ind.module

    def works(c):
        return _cochains_equal(m, homogeneous_differential(c, G.elements, 1, ind.rank), diff)

    formula_ok = False
    if try_formula:
        cand = _prism_candidate(z, sec, sec_bar, ind)
        formula_ok = works(cand)
        if formula_ok:
            return Sh4Result(cand, "formula", True, True)
    c = _solve_difference(ind, diff, bound)
    if c is None:
        raise CochainError("the two Shapiro images are not cohomologous")
    return Sh4Result(c, "linear algebra", works(c), formula_ok)


def random_two_cocycle(base: GammaModule, sub: Subgroup, group: FinGroup, rng: np.random.Generator,
                       bound: int = 12) -> dict:
    """A random homogeneous 2-cocycle of Δ: random cocycle combination plus a random coboundary."""
    sc = SubgroupCochains(group, sub, base)
    fd = FiniteCohomology(base, bound)
    gens = fd.cocycle_generators(2)
    n = base.ambient_rank
    phi = {}
    for g in gens:
        k = int(rng.integers(0, 5))
        for t, v in g.items():
            phi[t] = [a + k * b for a, b in zip(phi.get(t, [0] * n), v)]
    z = sc.homogeneous(sc.from_positions(phi), 2)
    b = sc.random_cochain(1, rng, 3)
    db = sc.differential(b, 1)
    return {t: [a + c for a, c in zip(z[t], db[t])] for t in z}
