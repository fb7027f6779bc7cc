"""Finite-level duality groups for lattice pairs ``Y ⊆ Ȳ`` over a site.

Functions ``S_E -> Ȳ`` are dense integer vectors of length
``place_count * rank``, with the value at place ``w`` in positions
``w * rank .. (w + 1) * rank``, all written in Ȳ coordinates.  The group
acts by ``(σ x)(σ w) = σ · x(w)``.

When a coroot sublattice ``Q ⊆ Y`` is present every group below is taken
modulo ``Q`` at each place (the reductive variant).  Classes are normalized
through SNF coordinates of the computed groups; representatives themselves
carry no preferred form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .band import InvalidSiteError
from .gmod import FinGroup, GammaModule, Subgroup, _preimage_lattice
from .sites import PlaceSystem, Tower, validate_site, validate_tower
from .zlat import (FgAbGroup, IntMatrix, LatticeSolver, block_diagonal, hstack, smith_form, solve_in_lattice,
                   subquotient, torsion_part, vstack)


class IsogenyError(ValueError):
    """The lattice pair is not a valid isogeny datum."""


class LocalGroupMismatch(ValueError):
    """A local entry is not an element of the expected local group."""


class IncoherentCollection(ValueError):
    """The collection has a nonzero obstruction."""

    def __init__(self, message: str, obstruction: list[int]):
        super().__init__(message)
        self.obstruction = obstruction


class NotRealizedAtLevel(ValueError):
    """The constructed representative misses the norm condition at this finite level."""


class InadmissibleSection(ValueError):
    """A section of the place map that is not a section, or leaves the chosen places."""


class ConsistencyError(AssertionError):
    """Two computations that must agree did not."""


def _empty(rows: int) -> IntMatrix:
    return IntMatrix.zeros(rows, 0)


def _cat(rows: int, *blocks: IntMatrix) -> IntMatrix:
    blocks = [b for b in blocks if b.cols]
    return hstack(*blocks) if blocks else _empty(rows)


# isogeny data -----------------------------------------------------------------


@dataclass(frozen=True)
class IsogenyDatum:
    """``Y ⊆ Ȳ`` of finite index, both Γ-stable, with an optional ``Q ⊆ Y``.

    ``y_inclusion`` has the basis of Y as columns in Ȳ coordinates;
    ``coroot_inclusion`` has the basis of Q as columns in Y coordinates.
    """

    group: FinGroup
    ybar: GammaModule
    y_inclusion: IntMatrix
    coroot_inclusion: IntMatrix | None = None

    def __post_init__(self):
        r = self.ybar.ambient_rank
        if not self.ybar.is_lattice:
            raise IsogenyError("Ȳ must be a lattice")
        if self.ybar.group.order != self.group.order:
            raise IsogenyError("Ȳ is a module for a different group")
        y = self.y_inclusion
        if y.rows != r or y.cols != r:
            raise IsogenyError(f"y_basis must be {r} columns of length {r}")
        if y.det() == 0:
            raise IsogenyError("Y does not have finite index in Ȳ")
        self._check_stable(y, "Y")
        if self.coroot_inclusion is not None:
            q = self.coroot_inclusion
            if q.rows != r:
                raise IsogenyError(f"coroot_basis columns must have length {r}")
            if q.cols and len([d for d in _diag(q) if d]) != q.cols:
                raise IsogenyError("coroot_basis is not injective")
            self._check_stable(y @ q if q.cols else _empty(r), "Q")

    def _check_stable(self, basis: IntMatrix, name: str):
        solver = LatticeSolver(basis)
        for g in self.group.elements:
            for j, col in enumerate(basis.columns()):
                if solver.solve(self.ybar.action[g] @ col) is None:
                    raise IsogenyError(f"{name} is not stable: element {g} moves basis vector {j} ({col}) outside it")

    @property
    def rank(self) -> int:
        return self.ybar.ambient_rank

    @property
    def is_reductive(self) -> bool:
        return self.coroot_inclusion is not None

    def action(self, g: int) -> IntMatrix:
        return self.ybar.action[g]

    @property
    def y_basis(self) -> IntMatrix:
        return self.y_inclusion

    @cached_property
    def q_basis(self) -> IntMatrix:
        """Q in Ȳ coordinates (no columns without coroot data)."""
        if self.coroot_inclusion is None or not self.coroot_inclusion.cols:
            return _empty(self.rank)
        return self.y_inclusion @ self.coroot_inclusion

    def torus_part(self) -> "IsogenyDatum":
        """The same pair with the coroot sublattice forgotten."""
        return IsogenyDatum(self.group, self.ybar, self.y_inclusion)

    def inflate(self, group: FinGroup, quotient: Sequence[int]) -> "IsogenyDatum":
        """The datum seen by a bigger group acting through ``quotient``."""
        ybar = GammaModule.lattice(group, [self.ybar.action[quotient[g]] for g in group.elements])
        return IsogenyDatum(group, ybar, self.y_inclusion, self.coroot_inclusion)

    @classmethod
    def from_json(cls, data: Mapping, group: FinGroup) -> "IsogenyDatum":
        try:
            r = int(data["rank_ybar"])
            action = [IntMatrix.from_rows(m, r) for m in data["action"]]
            y = IntMatrix.from_columns(data["y_basis"], r)
            q = data.get("coroot_basis")
        except (KeyError, TypeError, ValueError) as exc:
            raise IsogenyError(f"isogeny: missing or malformed field {exc}") from None
        if len(action) != group.order:
            raise IsogenyError("isogeny: need one action matrix per group element")
        if any(a.rows != r or a.cols != r for a in action):
            raise IsogenyError(f"isogeny: action matrices must be {r}x{r}")
        try:
            ybar = GammaModule.lattice(group, action)
        except ValueError as exc:
            raise IsogenyError(f"isogeny: action: {exc}") from None
        coroot = None
        if q is not None:
            coroot = IntMatrix.from_columns(q, r) if q else _empty(r)
        return cls(group, ybar, y, coroot)

    def to_json(self) -> dict:
        out = {
            "rank_ybar": self.rank,
            "action": [a.tolist() for a in self.ybar.action],
            "y_basis": self.y_inclusion.columns(),
        }
        if self.coroot_inclusion is not None:
            out["coroot_basis"] = self.coroot_inclusion.columns()
        return out


def _diag(m: IntMatrix) -> list[int]:
    return smith_form(m).diagonal


def sign_datum(group: FinGroup, character: Sequence[int]) -> IsogenyDatum:
    """``Y = Z`` with a sign character, ``Ȳ = ½Z``: in Ȳ coordinates Y is ``2Z``."""
    ybar = GammaModule.lattice(group, [IntMatrix.from_rows([[int(c)]], 1) for c in character])
    return IsogenyDatum(group, ybar, IntMatrix.from_rows([[2]], 1))


def sl2_datum(group: FinGroup) -> IsogenyDatum:
    """``Y = Q = Zα``, ``Ȳ = ½Zα``, trivial action."""
    ybar = GammaModule.lattice(group, [IntMatrix.identity(1) for _ in group.elements])
    return IsogenyDatum(group, ybar, IntMatrix.from_rows([[2]], 1), IntMatrix.identity(1))


# the lattice of functions on places -----------------------------------------------


@dataclass(frozen=True)
class PlaceFunctions:
    """Ȳ-valued functions on the places of a site, with the Γ-action."""

    datum: IsogenyDatum
    site: PlaceSystem

    def __post_init__(self):
        if self.datum.group.order != self.site.group.order or \
                self.datum.group.table != self.site.group.table:
            raise IsogenyError("datum and site use different groups")

    @property
    def rank(self) -> int:
        return self.datum.rank

    @property
    def size(self) -> int:
        return self.site.place_count * self.rank

    def value(self, x: Sequence[int], w: int) -> list[int]:
        r = self.rank
        return list(x[w * r:(w + 1) * r])

    def place_vector(self, w: int, y: Sequence[int]) -> list[int]:
        out = [0] * self.size
        out[w * self.rank:(w + 1) * self.rank] = list(y)
        return out

    def act(self, g: int, x: Sequence[int]) -> list[int]:
        out = [0] * self.size
        a = self.datum.action(g)
        r = self.rank
        for w in range(self.site.place_count):
            val = self.value(x, w)
            if any(val):
                gw = self.site.act(g, w)
                out[gw * r:(gw + 1) * r] = a @ val
        return out

    @cached_property
    def action_matrices(self) -> list[IntMatrix]:
        n = self.size
        return [IntMatrix.from_columns([self.act(g, [int(i == j) for i in range(n)]) for j in range(n)], n)
                for g in self.datum.group.elements]

    @cached_property
    def norm_matrix(self) -> IntMatrix:
        out = IntMatrix.zeros(self.size, self.size)
        for a in self.action_matrices:
            out = out + a
        return out

    def norm(self, x: Sequence[int]) -> list[int]:
        return self.norm_matrix @ list(x)

    def total(self, x: Sequence[int]) -> list[int]:
        r = self.rank
        out = [0] * r
        for w in range(self.site.place_count):
            for k in range(r):
                out[k] += x[w * r + k]
        return out

    @cached_property
    def sum_matrix(self) -> IntMatrix:
        r = self.rank
        return hstack(*[IntMatrix.identity(r) for _ in range(self.site.place_count)])

    def off_section(self) -> list[int]:
        return [w for w in range(self.site.place_count) if w not in self.site.section_set]

    def sub_functions(self, basis: IntMatrix) -> IntMatrix:
        """Columns spanning the functions with values in ``span(basis)`` at every place."""
        return block_diagonal([basis] * self.site.place_count)

    def sum_zero(self, basis: IntMatrix) -> IntMatrix:
        """Columns spanning ``L[S_E]_0`` for the sublattice ``L = span(basis)``."""
        n, r = self.site.place_count, self.rank
        cols = []
        for w in range(1, n):
            for y in basis.columns():
                x = self.place_vector(w, y)
                x[:r] = [-c for c in y]
                cols.append(x)
        return IntMatrix.from_columns(cols, self.size) if cols else _empty(self.size)

    def augmentation(self, gens: IntMatrix) -> IntMatrix:
        """Columns spanning ``I · span(gens)``; ``gens`` must span a Γ-stable lattice."""
        cols = []
        for g in self.datum.group.elements[1:]:
            for c in gens.columns():
                moved = self.act(g, c)
                d = [a - b for a, b in zip(moved, c)]
                if any(d):
                    cols.append(d)
        return IntMatrix.from_columns(cols, self.size) if cols else _empty(self.size)

    @cached_property
    def q_relations(self) -> IntMatrix:
        """``Q`` at every place (no columns for torus data)."""
        q = self.datum.q_basis
        return self.sub_functions(q) if q.cols else _empty(self.size)

    @cached_property
    def relations(self) -> IntMatrix:
        """``I Y[S_E]_0`` together with ``Q[S_E]``."""
        iy = self.augmentation(self.sum_zero(self.datum.y_basis))
        return _cat(self.size, iy, self.q_relations)

    def conditions(self, norm: bool) -> IntMatrix:
        """Preimage lattice of the support, sum and (optionally) norm conditions."""
        r, q = self.rank, self.datum.q_basis
        off = self.off_section()
        rows, rels = [], []
        for w in off:
            rows.append(IntMatrix.from_rows([[int(i == w * r + k) for i in range(self.size)] for k in range(r)],
                                            self.size))
            rels.append(self.datum.y_basis)
        rows.append(self.sum_matrix)
        rels.append(q)
        if norm:
            rows.append(self.norm_matrix)
            rels.append(self.q_relations)
        f = vstack(*rows)
        return _preimage_lattice(f, block_diagonal(rels))

    def in_conditions(self, x: Sequence[int], norm: bool = True) -> bool:
        q = self.datum.q_basis
        y = self.datum.y_basis
        for w in self.off_section():
            if solve_in_lattice(y, self.value(x, w)) is None:
                return False
        if solve_in_lattice(q, self.total(x)) is None:
            return False
        if norm and solve_in_lattice(self.q_relations, self.norm(x)) is None:
            return False
        return True


# global groups ------------------------------------------------------------------


@dataclass(frozen=True)
class NormTorsionCheck:
    """Comparison of the norm-kernel quotient with the torsion of the full quotient."""

    norm_factors: tuple[int, ...]
    torsion_factors: tuple[int, ...]
    norm_in_torsion: bool
    torsion_in_norm: bool

    @property
    def ok(self) -> bool:
        return self.norm_factors == self.torsion_factors and self.norm_in_torsion and self.torsion_in_norm

    def to_json(self) -> dict:
        return {"norm_kernel_factors": list(self.norm_factors), "torsion_factors": list(self.torsion_factors),
                "norm_kernel_inside_torsion": self.norm_in_torsion,
                "torsion_inside_norm_kernel": self.torsion_in_norm, "equal": self.ok}


@dataclass(frozen=True)
class GlobalGroup:
    """``Ȳ[S_E, Ṡ_E]_0^N / I Y[S_E]_0`` (modulo ``Q[S_E]`` for reductive data)."""

    functions: PlaceFunctions
    group: FgAbGroup
    norm_check: NormTorsionCheck | None

    @property
    def datum(self) -> IsogenyDatum:
        return self.functions.datum

    @property
    def site(self) -> PlaceSystem:
        return self.functions.site

    def contains(self, x: Sequence[int]) -> bool:
        return self.functions.in_conditions(x, norm=True)

    def coordinates(self, x: Sequence[int]) -> list[int]:
        if not self.contains(x):
            raise LocalGroupMismatch("representative violates the support, sum or norm condition")
        return self.group.coordinates(list(x))

    def equal(self, x1: Sequence[int], x2: Sequence[int]) -> bool:
        return self.coordinates(x1) == self.coordinates(x2)

    def representative(self, coords: Sequence[int]) -> list[int]:
        return self.group.representative(coords)

    def element(self, x: Sequence[int]) -> "GlobalClass":
        return GlobalClass(self, tuple(int(c) for c in x), tuple(self.coordinates(x)))

    def random_element(self, rng: np.random.Generator, scramble: bool = True) -> "GlobalClass":
        coords = [int(rng.integers(0, d)) if d else int(rng.integers(-3, 4)) for d in self.group.invariant_factors]
        x = self.representative(coords)
        rel = self.functions.relations
        if scramble and rel.cols:
            x = [a + b for a, b in zip(x, rel @ [int(c) for c in rng.integers(-2, 3, rel.cols)])]
        return self.element(x)

    def to_json(self) -> dict:
        out = {"invariant_factors": list(self.group.invariant_factors), "order": self.group.order}
        if self.norm_check is not None:
            out["norm_torsion_check"] = self.norm_check.to_json()
        return out


@dataclass(frozen=True)
class GlobalClass:
    parent: GlobalGroup
    representative: tuple[int, ...]
    coordinates: tuple[int, ...]

    def as_mapping(self) -> dict[str, list[int]]:
        f = self.parent.functions
        return {f.site.labels[w]: f.value(self.representative, w) for w in range(f.site.place_count)
                if any(f.value(self.representative, w))}

    def to_json(self) -> dict:
        return {"representative": self.as_mapping(), "coordinates": list(self.coordinates)}


def _torsion_inclusions(norm_group: FgAbGroup, full: FgAbGroup, tor: FgAbGroup, witness: IntMatrix,
                        functions: PlaceFunctions) -> tuple[bool, bool]:
    norm_in = all(full.element_order(g) != 0 for g in norm_group.generators())
    tor_in = all(functions.in_conditions(c, norm=True) for c in witness.columns())
    return norm_in, tor_in


def global_group(d: IsogenyDatum, p: PlaceSystem, check: bool = True) -> GlobalGroup:
    """The finite-level global group, cross-checked against the torsion description for tori."""
    f = PlaceFunctions(d, p)
    rel = f.relations
    kernel = f.conditions(norm=True)
    group = subquotient(_cat(f.size, kernel, rel), rel)
    if not group.is_finite:
        raise ConsistencyError("norm-kernel quotient is infinite")
    check_result = None
    if check and not d.is_reductive:
        full = subquotient(_cat(f.size, f.conditions(norm=False), rel), rel)
        tor, witness = torsion_part(full)
        norm_in, tor_in = _torsion_inclusions(group, full, tor, witness, f)
        check_result = NormTorsionCheck(group.invariant_factors, tor.invariant_factors, norm_in, tor_in)
        if not check_result.ok:
            raise ConsistencyError(f"norm kernel and torsion disagree: {check_result.to_json()}")
    return GlobalGroup(f, group, check_result)


def sum_zero_module(d: IsogenyDatum, p: PlaceSystem) -> tuple[GammaModule, IntMatrix]:
    """``Y[S_E]_0`` as a Γ-lattice, with its basis (columns, Ȳ coordinates)."""
    f = PlaceFunctions(d, p)
    basis = f.sum_zero(d.y_basis)
    solver = LatticeSolver(basis)
    mats = []
    for a in f.action_matrices:
        cols = [solver.solve(a @ c) for c in basis.columns()]
        mats.append(IntMatrix.from_columns(cols, basis.cols) if cols else IntMatrix.zeros(0, 0))
    return GammaModule.lattice(d.group, mats), basis


# support reduction ----------------------------------------------------------------


@dataclass(frozen=True)
class ReductionStep:
    place: int
    element: int
    fixed_place: int
    value: tuple[int, ...]


@dataclass(frozen=True)
class Reduction:
    representative: tuple[int, ...]
    witness: tuple[int, ...]
    steps: tuple[ReductionStep, ...]

    def to_json(self, site: PlaceSystem) -> dict:
        return {
            "representative": list(self.representative),
            "witness": list(self.witness),
            "steps": [{"place": site.labels[s.place], "element": s.element,
                       "fixed_place": site.labels[s.fixed_place], "value": list(s.value)} for s in self.steps],
        }


def _require_condition4(p: PlaceSystem):
    rep = validate_site(p)
    if not rep.condition4:
        raise InvalidSiteError(f"fixed-point condition fails for elements {list(rep.unfixed_elements)}")


def support_reduce(d: IsogenyDatum, p: PlaceSystem, x: Sequence[int],
                   rng: np.random.Generator | None = None) -> Reduction:
    """Move every value off the section places onto section places.

    Each step picks ``σ`` with ``σ w`` a section place and a section place
    ``v0`` fixed by ``σ``, then adds ``(σ - 1)(y_w[w] - y_w[v0])``.  The
    returned witness is ``input - output``, an element of ``I Y[S_E]_0``.
    With ``rng`` the choices of ``σ`` and ``v0`` are random.
    """
    _require_condition4(p)
    f = PlaceFunctions(d, p)
    x = [int(c) for c in x]
    if len(x) != f.size:
        raise LocalGroupMismatch(f"representative has length {len(x)}, expected {f.size}")
    if not f.in_conditions(x, norm=False):
        raise LocalGroupMismatch("values off the section places must lie in Y and the total must vanish")
    G = p.group
    out = list(x)
    steps = []
    for w in f.off_section():
        yw = f.value(out, w)
        if not any(yw):
            continue
        movers = [g for g in G.elements if p.act(g, w) in p.section_set]
        sigma = movers[int(rng.integers(len(movers)))] if rng is not None else movers[0]
        fixed = [v for v in p.section if p.act(sigma, v) == v]
        v0 = fixed[int(rng.integers(len(fixed)))] if rng is not None else fixed[0]
        delta = f.place_vector(w, yw)
        delta[v0 * f.rank:(v0 + 1) * f.rank] = [a - b for a, b in zip(delta[v0 * f.rank:(v0 + 1) * f.rank], yw)]
        moved = f.act(sigma, delta)
        out = [a - b + c for a, b, c in zip(out, delta, moved)]
        steps.append(ReductionStep(w, sigma, v0, tuple(yw)))
    witness = tuple(a - b for a, b in zip(x, out))
    return Reduction(tuple(out), witness, tuple(steps))


def witness_in_augmentation(d: IsogenyDatum, p: PlaceSystem, witness: Sequence[int]) -> bool:
    f = PlaceFunctions(d, p)
    return solve_in_lattice(f.augmentation(f.sum_zero(d.y_basis)), list(witness)) is not None


# local groups ----------------------------------------------------------------------


def local_relations(d: IsogenyDatum, gv: Subgroup | Sequence[int]) -> IntMatrix:
    """``I_v Y`` together with ``Q``, as columns in Ȳ coordinates."""
    elements = gv.elements if isinstance(gv, Subgroup) else tuple(gv)
    r = d.rank
    cols = []
    for h in elements:
        if h == 0:
            continue
        a = d.action(h)
        for y in d.y_basis.columns():
            diff = [s - t for s, t in zip(a @ y, y)]
            if any(diff):
                cols.append(diff)
    iv = IntMatrix.from_columns(cols, r) if cols else _empty(r)
    return _cat(r, iv, d.q_basis)


def local_group(d: IsogenyDatum, gv: Subgroup | Sequence[int]) -> FgAbGroup:
    """``(Ȳ / I_v Y)[tor]``, taken modulo ``Q`` for reductive data."""
    r = d.rank
    rel = local_relations(d, gv)
    full = subquotient(_cat(r, IntMatrix.identity(r), rel), rel)
    return torsion_part(full)[0]


def global_target(d: IsogenyDatum) -> FgAbGroup:
    """``(Ȳ / I Y)[tor]``, where the sum of local classes lives."""
    return local_group(d, d.group.elements)


@dataclass(frozen=True)
class LocalClass:
    place: str
    decomposition_group: tuple[int, ...]
    representative: tuple[int, ...]
    coordinates: tuple[int, ...]

    def to_json(self) -> dict:
        return {"place": self.place, "decomposition_group": list(self.decomposition_group),
                "representative": list(self.representative), "coordinates": list(self.coordinates)}


def local_class(d: IsogenyDatum, p: PlaceSystem, v: int, y: Sequence[int]) -> LocalClass:
    gv = p.stabilizer(p.dot(v))
    grp = local_group(d, gv)
    y = [int(c) for c in y]
    if len(y) != d.rank or not grp.contains(y):
        raise LocalGroupMismatch(f"entry {y} at {p.rational_labels[v]} is not in the local group")
    return LocalClass(p.rational_labels[v], gv.elements, tuple(y), tuple(grp.coordinates(y)))


def _coset_representatives(p: PlaceSystem, gv: Subgroup, rng: np.random.Generator | None,
                           largest: bool = False) -> list[int]:
    reps = []
    for coset in gv.right_cosets():
        if 0 in coset:
            reps.append(0)
        elif rng is not None:
            reps.append(coset[int(rng.integers(len(coset)))])
        else:
            reps.append(max(coset) if largest else min(coset))
    return reps


def localize_value(d: IsogenyDatum, p: PlaceSystem, x: Sequence[int], v: int, reps: Sequence[int]) -> list[int]:
    """``Σ_τ τ̇ x(τ̇⁻¹ v̇)`` for the given coset representatives."""
    f = PlaceFunctions(d, p)
    G = p.group
    dot = p.dot(v)
    out = [0] * d.rank
    for t in reps:
        val = f.value(x, p.act(G.inv(t), dot))
        if any(val):
            out = [a + b for a, b in zip(out, d.action(t) @ val)]
    return out


def localize(gg: GlobalGroup, x: Sequence[int], v: int, rng: np.random.Generator | None = None) -> LocalClass:
    """Localization at the rational place ``v``, recomputed with a second set of coset representatives."""
    d, p = gg.datum, gg.site
    if not gg.contains(x):
        raise LocalGroupMismatch("not a representative of the global group")
    gv = p.stabilizer(p.dot(v))
    grp = local_group(d, gv)
    first = localize_value(d, p, x, v, _coset_representatives(p, gv, None))
    second = localize_value(d, p, x, v, _coset_representatives(p, gv, rng, largest=True))
    if not grp.contains(first):
        raise ConsistencyError("localization is not torsion")
    c1, c2 = grp.coordinates(first), grp.coordinates(second)
    if c1 != c2:
        raise ConsistencyError(f"localization depends on coset representatives: {c1} vs {c2}")
    return LocalClass(p.rational_labels[v], gv.elements, tuple(first), tuple(c1))


def localize_all(gg: GlobalGroup, x: Sequence[int], rng: np.random.Generator | None = None) -> dict[str, LocalClass]:
    return {gg.site.rational_labels[v]: localize(gg, x, v, rng) for v in range(gg.site.s_count)}


# coherence ------------------------------------------------------------------------------


@dataclass(frozen=True)
class CoherenceResult:
    coherent: bool
    obstruction: tuple[int, ...]
    obstruction_coordinates: tuple[int, ...]
    target_factors: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "coherent": self.coherent,
            "obstruction": "0" if self.coherent else str(list(self.obstruction_coordinates)),
            "obstruction_representative": list(self.obstruction),
            "obstruction_coordinates": list(self.obstruction_coordinates),
            "target_invariant_factors": list(self.target_factors),
        }


def _collection_vectors(d: IsogenyDatum, p: PlaceSystem, collection: Mapping) -> list[list[int]]:
    """Per rational place, the entry (zero if absent); keys are rational indices or labels."""
    vecs = [[0] * d.rank for _ in range(p.s_count)]
    for key, y in collection.items():
        if isinstance(key, int):
            v = key
        elif key in p.rational_labels:
            v = p.rational_index(key)
        else:
            w = p.place_index(key)
            if w not in p.section_set:
                raise LocalGroupMismatch(f"{key} is neither a rational place nor a section place")
            v = p.fiber[w]
        y = [int(c) for c in (y.representative if isinstance(y, LocalClass) else y)]
        if len(y) != d.rank:
            raise LocalGroupMismatch(f"entry at {key} has length {len(y)}, expected {d.rank}")
        vecs[v] = y
    for v, y in enumerate(vecs):
        if any(y):
            local_class(d, p, v, y)
    return vecs


def coherence(d: IsogenyDatum, p: PlaceSystem, collection: Mapping) -> CoherenceResult:
    """Sum of the local entries in ``(Ȳ / I Y)[tor]``; coherent iff it vanishes."""
    vecs = _collection_vectors(d, p, collection)
    total = [sum(col) for col in zip(*vecs)] if vecs else [0] * d.rank
    target = global_target(d)
    coords = target.coordinates(total)
    coherent = not any(coords)
    return CoherenceResult(coherent, tuple(total), tuple(coords), target.invariant_factors)


def globalize(d: IsogenyDatum, p: PlaceSystem, collection: Mapping, gg: GlobalGroup | None = None) -> GlobalClass:
    """A global class supported on the section places with the given localizations."""
    _require_condition4(p)
    vecs = _collection_vectors(d, p, collection)
    total = [sum(col) for col in zip(*vecs)]
    target = global_target(d)
    coords = target.coordinates(total)
    if any(coords):
        raise IncoherentCollection(f"obstruction {coords} is nonzero", coords)
    r = d.rank
    G = d.group
    blocks = []
    movers = []
    for g in G.elements[1:]:
        a = d.action(g)
        cols = [[s - t for s, t in zip(a @ y, y)] for y in d.y_basis.columns()]
        blocks.append(IntMatrix.from_columns(cols, r))
        movers.append(g)
    gens = _cat(r, *blocks, d.q_basis)
    c = solve_in_lattice(gens, total) if gens.cols else ([] if not any(total) else None)
    if c is None:
        raise ConsistencyError("sum lies in the torsion-zero class but not in I Y + Q")
    vecs = [list(y) for y in vecs]
    k = d.y_basis.cols
    for i, g in enumerate(movers):
        coef = c[i * k:(i + 1) * k]
        if not any(coef):
            continue
        lam = d.y_basis @ coef
        v = next(v for v in range(p.s_count) if p.act(g, p.dot(v)) == p.dot(v))
        moved = d.action(g) @ lam
        vecs[v] = [a + b - m for a, b, m in zip(vecs[v], lam, moved)]
    qcoef = c[len(movers) * k:]
    if any(qcoef):
        q = d.q_basis @ qcoef
        vecs[0] = [a - b for a, b in zip(vecs[0], q)]
    if any(sum(col) for col in zip(*vecs)):
        raise ConsistencyError("adjusted collection does not sum to zero")
    f = PlaceFunctions(d, p)
    x = [0] * f.size
    for v, y in enumerate(vecs):
        w = p.dot(v)
        x[w * r:(w + 1) * r] = y
    if gg is None:
        gg = global_group(d, p, check=False)
    if not gg.contains(x):
        raise NotRealizedAtLevel("the glued representative is not killed by the norm at this level")
    return gg.element(x)


# level change -------------------------------------------------------------------------------


def default_section(t: Tower, rng: np.random.Generator | None = None) -> tuple[int, ...]:
    """A section ``S_E -> S_K`` of the place map sending section places to section places."""
    lo, up = t.lower, t.upper
    out = []
    for w in range(lo.place_count):
        if w in lo.section_set:
            v = lo.fiber[w]
            out.append(up.dot(t.lower_in_upper[v]))
            continue
        over = [u for u, pw in enumerate(t.place_map) if pw == w]
        out.append(over[int(rng.integers(len(over)))] if rng is not None else over[0])
    return tuple(out)


def check_section(t: Tower, section: Sequence[int]):
    lo, up = t.lower, t.upper
    if len(section) != lo.place_count:
        raise InadmissibleSection("section needs one upper place per lower place")
    for w, u in enumerate(section):
        if not (0 <= u < up.place_count) or t.place_map[u] != w:
            raise InadmissibleSection(f"section value at {lo.labels[w]} does not lie over it")
        if w in lo.section_set and u not in up.section_set:
            raise InadmissibleSection(f"section sends {lo.labels[w]} outside the upper section places")


def shriek(t: Tower, gg: GlobalGroup, x: Sequence[int], section: Sequence[int] | None = None,
           upper: GlobalGroup | None = None, check: bool = True) -> GlobalClass:
    """Push a class from the lower level to the upper one along a section of the place map."""
    if check:
        rep = validate_tower(t)
        if not rep.ok:
            raise InvalidSiteError("; ".join(rep.failures) or "invalid tower")
    section = default_section(t) if section is None else tuple(section)
    check_section(t, section)
    if not gg.contains(x):
        raise LocalGroupMismatch("not a representative of the lower global group")
    d = gg.datum
    if upper is None:
        upper = global_group(d.inflate(t.upper.group, t.quotient), t.upper, check=False)
    r = d.rank
    low = gg.functions
    out = [0] * upper.functions.size
    for w, u in enumerate(section):
        out[u * r:(u + 1) * r] = low.value(x, w)
    if not upper.contains(out):
        raise NotRealizedAtLevel("the pushed representative misses the norm condition upstairs")
    return upper.element(out)


def upper_group(t: Tower, gg: GlobalGroup) -> GlobalGroup:
    return global_group(gg.datum.inflate(t.upper.group, t.quotient), t.upper, check=False)


# the reductive sequence ---------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceReport:
    factors: tuple[tuple[int, ...], ...]
    first_composite_zero: bool
    second_composite_zero: bool
    samples: int

    @property
    def ok(self) -> bool:
        return self.first_composite_zero and self.second_composite_zero

    def to_json(self) -> dict:
        names = ["coroot_norm_kernel", "torus_global", "reductive_global", "coroot_invariants_mod_norms"]
        return {
            "groups": {n: list(f) for n, f in zip(names, self.factors)},
            "first_composite_zero": self.first_composite_zero,
            "second_composite_zero": self.second_composite_zero,
            "samples": self.samples,
        }


def reductive_sequence(d: IsogenyDatum, p: PlaceSystem, rng: np.random.Generator | None = None,
                       samples: int = 10) -> SequenceReport:
    """The four-term sequence from the coroot lattice to invariants modulo norms.

    Maps: identity on representatives twice, then a representative with
    total exactly zero goes to its norm.  Both composites are evaluated on
    generators and on random combinations.
    """
    if not d.is_reductive:
        raise IsogenyError("the sequence needs coroot data")
    rng = rng if rng is not None else np.random.default_rng(0)
    f = PlaceFunctions(d, p)
    q = d.q_basis
    size = f.size
    # Q[S_E]_0^N / I Q[S_E]_0
    q_sum_zero = f.sum_zero(q)
    q_kernel = _preimage_lattice(vstack(f.sum_matrix, f.norm_matrix, _eye_rows(size, size)),
                                 block_diagonal([IntMatrix.zeros(d.rank, 0), _empty(size), f.sub_functions(q)]))
    iq = f.augmentation(q_sum_zero)
    g1 = subquotient(_cat(size, q_kernel, iq), iq)
    torus = global_group(d.torus_part(), p, check=False)
    red = global_group(d, p, check=False)
    # Q[S_E]_0^Γ / N(Q[S_E]_0)
    inv_rows = [a - IntMatrix.identity(size) for a in f.action_matrices[1:]]
    q_inv = _preimage_lattice(vstack(f.sum_matrix, *inv_rows, _eye_rows(size, size)) if inv_rows
                              else vstack(f.sum_matrix, _eye_rows(size, size)),
                              block_diagonal([IntMatrix.zeros(d.rank, 0)] + [_empty(size)] * len(inv_rows)
                                             + [f.sub_functions(q)]))
    norms = IntMatrix.from_columns([f.norm(c) for c in q_sum_zero.columns()], size) if q_sum_zero.cols \
        else _empty(size)
    g4 = subquotient(_cat(size, q_inv, norms), norms)

    def combos(grp: FgAbGroup) -> list[list[int]]:
        gens = grp.generators()
        out = list(gens)
        for _ in range(samples):
            coords = [int(rng.integers(0, dd)) if dd else int(rng.integers(-3, 4)) for dd in grp.invariant_factors]
            out.append(grp.representative(coords))
        return out

    first = all(not any(red.coordinates(x)) for x in combos(g1))
    second = True
    for x in combos(torus.group):
        if not red.contains(x):
            second = False
            break
        lifted = _zero_total(f, x)
        second = second and not any(g4.coordinates(f.norm(lifted)))
    return SequenceReport((g1.invariant_factors, torus.group.invariant_factors, red.group.invariant_factors,
                           g4.invariant_factors), first, second, samples)


def third_map(d: IsogenyDatum, p: PlaceSystem, x: Sequence[int]) -> list[int]:
    """Norm of a representative whose total is exactly zero."""
    f = PlaceFunctions(d, p)
    return f.norm(_zero_total(f, x))


def _zero_total(f: PlaceFunctions, x: Sequence[int]) -> list[int]:
    tot = f.total(x)
    out = list(x)
    w = f.site.dot(0)
    r = f.rank
    out[w * r:(w + 1) * r] = [a - b for a, b in zip(out[w * r:(w + 1) * r], tot)]
    return out


def _eye_rows(n: int, cols: int) -> IntMatrix:
    return IntMatrix.identity(n) if n == cols else IntMatrix.from_rows([[int(i == j) for j in range(cols)]
                                                                        for i in range(n)], cols)
