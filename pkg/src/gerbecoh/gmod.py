"""Finite groups, their modules, Tate cohomology and a brute-force oracle.

Groups are Cayley tables on ``range(order)`` with 0 the identity.  A
module is ``Z^n`` modulo a relation lattice, with one integer matrix per
group element.  The oracle computes ``H^k`` from normalized inhomogeneous
cochains directly, with no resolution tricks, so it serves as an
independent check on everything computed through norm maps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import zmod
from .zlat import (
    FgAbGroup,
    IntMatrix,
    LatticeSolver,
    block_diagonal,
    direct_sum_factors,
    hstack,
    integer_kernel,
    quotient_presentation,
    subquotient,
    vstack,
)


class GroupAxiomError(ValueError):
    """A Cayley table that is not a group table."""


class ModuleAxiomError(ValueError):
    """Action matrices that do not define a module."""


class OracleOutOfRange(RuntimeError):
    """The brute-force oracle refuses inputs above its size bound."""


# groups -------------------------------------------------------------------


@dataclass(frozen=True)
class FinGroup:
    table: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        n = len(self.table)
        if n == 0:
            raise GroupAxiomError("empty table")
        rng = range(n)
        for i, row in enumerate(self.table):
            if len(row) != n or any(not (0 <= x < n) for x in row):
                raise GroupAxiomError(f"row {i} is not a map into the group")
            if sorted(row) != list(rng):
                raise GroupAxiomError(f"row {i} is not a permutation")
        if any(self.table[0][j] != j or self.table[j][0] != j for j in rng):
            raise GroupAxiomError("element 0 is not the identity")
        t = self.table
        for a in rng:
            ta = t[a]
            for b in rng:
                tab = t[ta[b]]
                tb = t[b]
                for c in rng:
                    if tab[c] != ta[tb[c]]:
                        raise GroupAxiomError(f"associativity fails at ({a}, {b}, {c})")

    @classmethod
    def from_table(cls, table: Sequence[Sequence[int]], name: str = "") -> "FinGroup":
        return cls(tuple(tuple(int(x) for x in row) for row in table), name)

    @classmethod
    def from_permutations(cls, perms: Sequence[Sequence[int]], name: str = "") -> "FinGroup":
        """The group generated by the given permutations, identity first."""
        deg = len(perms[0])
        ident = tuple(range(deg))
        elems = [ident]
        index = {ident: 0}
        frontier = [ident]
        gens = [tuple(p) for p in perms]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = tuple(x[g[i]] for i in range(deg))
                    if y not in index:
                        index[y] = len(elems)
                        elems.append(y)
                        nxt.append(y)
            frontier = nxt
        # (x*y)(i) = x(y(i))
        table = [[index[tuple(x[y[i]] for i in range(deg))] for y in elems] for x in elems]
        return cls.from_table(table, name)

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def elements(self) -> range:
        return range(len(self.table))

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    @cached_property
    def inverses(self) -> tuple[int, ...]:
        return tuple(row.index(0) for row in self.table)

    def inv(self, a: int) -> int:
        return self.inverses[a]

    def product(self, *xs: int) -> int:
        out = 0
        for x in xs:
            out = self.table[out][x]
        return out

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != 0:
            x = self.table[x][a]
            k += 1
        return k

    def is_abelian(self) -> bool:
        return all(self.table[a][b] == self.table[b][a] for a in self.elements for b in self.elements)

    def is_cyclic(self) -> bool:
        return any(self.element_order(a) == self.order for a in self.elements)

    def closure(self, gens: Iterable[int]) -> tuple[int, ...]:
        elems = {0}
        frontier = [0]
        gens = list(gens)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.table[x][g]
                    if y not in elems:
                        elems.add(y)
                        nxt.append(y)
            frontier = nxt
        return tuple(sorted(elems))

    def subgroups(self) -> list["Subgroup"]:
        found = {self.closure([a]) for a in self.elements}
        frontier = set(found)
        while frontier:
            new = set()
            for h in frontier:
                for a in self.elements:
                    if a not in h:
                        k = self.closure(h + (a,))
                        if k not in found:
                            new.add(k)
            found |= new
            frontier = new
        return [Subgroup(self, h) for h in sorted(found, key=lambda h: (len(h), h))]

    def is_homomorphism(self, target: "FinGroup", images: Sequence[int]) -> bool:
        return all(
            images[self.table[a][b]] == target.table[images[a]][images[b]]
            for a in self.elements
            for b in self.elements
        )

    def to_json(self) -> dict:
        return {"order": self.order, "table": [list(r) for r in self.table]}

    @classmethod
    def from_json(cls, data: Mapping) -> "FinGroup":
        try:
            group = cls.from_table(data["table"], str(data.get("name", "")))
        except (KeyError, TypeError) as exc:
            raise GroupAxiomError(f"group: missing or malformed field {exc}") from None
        if "order" in data and data["order"] != group.order:
            raise GroupAxiomError("group: order does not match the table")
        return group


def cyclic_group(n: int) -> FinGroup:
    return FinGroup.from_table([[(i + j) % n for j in range(n)] for i in range(n)], f"C{n}")


def direct_product(g: FinGroup, h: FinGroup) -> FinGroup:
    """Elements are ``a * h.order + b``."""
    m = h.order
    table = [
        [g.table[i // m][j // m] * m + h.table[i % m][j % m] for j in range(g.order * m)]
        for i in range(g.order * m)
    ]
    return FinGroup.from_table(table, f"{g.name}x{h.name}")


def dihedral_group(n: int) -> FinGroup:
    """Symmetries of an n-gon, order 2n."""
    rot = [(i + 1) % n for i in range(n)]
    ref = [(-i) % n for i in range(n)]
    return FinGroup.from_permutations([rot, ref], f"D{n}")


def symmetric_group_3() -> FinGroup:
    return FinGroup.from_permutations([[1, 0, 2], [1, 2, 0]], "S3")


def quaternion_group() -> FinGroup:
    # left multiplication by i and j on {1, i, j, k, -1, -i, -j, -k}
    i_perm = [1, 4, 3, 6, 5, 0, 7, 2]
    j_perm = [2, 7, 4, 1, 6, 3, 0, 5]
    return FinGroup.from_permutations([i_perm, j_perm], "Q8")


def small_groups(max_order: int = 8) -> list[FinGroup]:
    """One group from each isomorphism class of order at most ``max_order`` (<= 8)."""
    if max_order > 8:
        raise ValueError("catalogue only goes up to order 8")
    c2 = cyclic_group(2)
    out = [cyclic_group(n) for n in range(1, max_order + 1)]
    extra = {
        4: [direct_product(c2, c2)],
        6: [symmetric_group_3()],
        8: [direct_product(cyclic_group(4), c2), direct_product(direct_product(c2, c2), c2),
            dihedral_group(4), quaternion_group()],
    }
    for n, gs in extra.items():
        if n <= max_order:
            out.extend(gs)
    return sorted(out, key=lambda g: g.order)


@dataclass(frozen=True)
class Subgroup:
    parent: FinGroup
    elements: tuple[int, ...]

    def __post_init__(self):
        els = tuple(sorted(set(self.elements)))
        object.__setattr__(self, "elements", els)
        if not els or els[0] != 0:
            raise GroupAxiomError("subgroup must contain the identity")
        s = set(els)
        t = self.parent.table
        for a in els:
            for b in els:
                if t[a][b] not in s:
                    raise GroupAxiomError(f"subgroup not closed: {a}*{b}")

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, a: int) -> bool:
        return a in self._set

    @cached_property
    def _set(self) -> frozenset[int]:
        return frozenset(self.elements)

    @cached_property
    def as_group(self) -> FinGroup:
        """Abstract group on ``range(order)``; position i stands for ``elements[i]``."""
        pos = {a: i for i, a in enumerate(self.elements)}
        t = self.parent.table
        return FinGroup.from_table([[pos[t[a][b]] for b in self.elements] for a in self.elements])

    def conjugate(self, g: int) -> "Subgroup":
        G = self.parent
        return Subgroup(G, tuple(G.product(g, h, G.inv(g)) for h in self.elements))

    def right_cosets(self) -> list[tuple[int, ...]]:
        """Cosets ``H g``, each sorted, ordered by smallest element."""
        seen = set()
        out = []
        for g in self.parent.elements:
            if g in seen:
                continue
            c = tuple(sorted(self.parent.mul(h, g) for h in self.elements))
            seen.update(c)
            out.append(c)
        return out

    def left_cosets(self) -> list[tuple[int, ...]]:
        seen = set()
        out = []
        for g in self.parent.elements:
            if g in seen:
                continue
            c = tuple(sorted(self.parent.mul(g, h) for h in self.elements))
            seen.update(c)
            out.append(c)
        return out


def whole_group(g: FinGroup) -> Subgroup:
    return Subgroup(g, tuple(g.elements))


# modules ------------------------------------------------------------------


@dataclass(frozen=True)
class GammaModule:
    """``Z^ambient_rank / span(relations)`` with a group action."""

    group: FinGroup
    ambient_rank: int
    relations: IntMatrix
    action: tuple[IntMatrix, ...]

    def __post_init__(self):
        n = self.ambient_rank
        if self.relations.rows != n:
            raise ModuleAxiomError("relations have the wrong number of rows")
        if len(self.action) != self.group.order:
            raise ModuleAxiomError("need one action matrix per group element")
        for g, a in enumerate(self.action):
            if (a.rows, a.cols) != (n, n):
                raise ModuleAxiomError(f"action matrix of {g} has the wrong shape")
        rel = self.relation_solver
        if not self.equal_maps(self.action[0], IntMatrix.identity(n)):
            raise ModuleAxiomError("identity does not act trivially")
        for g, a in enumerate(self.action):
            for col in (a @ self.relations).columns():
                if rel.solve(col) is None:
                    raise ModuleAxiomError(f"element {g} does not preserve the relations")
        G = self.group
        for g in G.elements:
            for h in G.elements:
                if not self.equal_maps(self.action[G.mul(g, h)], self.action[g] @ self.action[h]):
                    raise ModuleAxiomError(f"action is not multiplicative at ({g}, {h})")

    @classmethod
    def lattice(cls, group: FinGroup, action: Sequence[IntMatrix]) -> "GammaModule":
        n = action[0].rows
        return cls(group, n, IntMatrix.zeros(n, 0), tuple(action))

    @classmethod
    def trivial(cls, group: FinGroup, factors: Sequence[int]) -> "GammaModule":
        """``⊕ Z/d`` with trivial action (``d = 0`` gives ``Z``)."""
        n = len(factors)
        rel = [[d if i == j else 0 for i in range(n)] for j, d in enumerate(factors) if d]
        relations = IntMatrix.from_columns(rel, n) if rel else IntMatrix.zeros(n, 0)
        return cls(group, n, relations, tuple(IntMatrix.identity(n) for _ in group.elements))

    @classmethod
    def from_generator_images(cls, group: FinGroup, action: Sequence[IntMatrix], relations: IntMatrix | None = None):
        n = action[0].rows
        return cls(group, n, relations if relations is not None else IntMatrix.zeros(n, 0), tuple(action))

    @classmethod
    def from_json(cls, data: Mapping, group: FinGroup) -> "GammaModule":
        """``{"rank", "action": [matrix rows per element], "relations": [columns]}``."""
        try:
            n = int(data["rank"])
            action = tuple(IntMatrix.from_rows(m, n) for m in data["action"])
            rel = data.get("relations") or []
            relations = IntMatrix.from_columns(rel, n) if rel else IntMatrix.zeros(n, 0)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModuleAxiomError(f"module: missing or malformed field {exc}") from None
        return cls(group, n, relations, action)

    def to_json(self) -> dict:
        return {"rank": self.ambient_rank, "action": [a.tolist() for a in self.action],
                "relations": self.relations.columns()}

    @cached_property
    def relation_solver(self) -> LatticeSolver:
        return LatticeSolver(self.relations)

    def is_zero(self, vec: Sequence[int]) -> bool:
        if not any(vec):
            return True
        return self.relation_solver.solve(vec) is not None

    def equal(self, v1: Sequence[int], v2: Sequence[int]) -> bool:
        return self.is_zero([a - b for a, b in zip(v1, v2)])

    def equal_maps(self, a: IntMatrix, b: IntMatrix) -> bool:
        return all(self.is_zero(c) for c in (a - b).columns())

    def act(self, g: int, vec: Sequence[int]) -> list[int]:
        return self.action[g] @ list(vec)

    @cached_property
    def abstract(self) -> FgAbGroup:
        return quotient_presentation(self.ambient_rank, self.relations)

    @property
    def is_finite(self) -> bool:
        return self.abstract.is_finite

    @property
    def is_lattice(self) -> bool:
        return self.relations.cols == 0 or self.relations.is_zero()

    def restrict(self, sub: Subgroup) -> "GammaModule":
        return GammaModule(sub.as_group, self.ambient_rank, self.relations,
                           tuple(self.action[a] for a in sub.elements))

    @cached_property
    def coordinate_action(self) -> list[list[list[int]]]:
        """Action in invariant-factor coordinates: one list-of-rows matrix per element."""
        ab = self.abstract
        gens = ab.generators()
        out = []
        for a in self.action:
            cols = [ab.coordinates(a @ gv) for gv in gens]
            k = len(gens)
            out.append([[cols[j][i] for j in range(k)] for i in range(k)])
        return out

    def is_equivariant(self, target: "GammaModule", f: IntMatrix) -> bool:
        """Whether ``f`` (ambient coordinates) is a well-defined Γ-map into ``target``."""
        if target.group.order != self.group.order:
            return False
        for col in (f @ self.relations).columns():
            if not target.is_zero(col):
                return False
        return all(
            target.equal_maps(f @ self.action[g], target.action[g] @ f) for g in self.group.elements
        )


def norm_map(m: GammaModule) -> IntMatrix:
    out = IntMatrix.zeros(m.ambient_rank, m.ambient_rank)
    for a in m.action:
        out = out + a
    return out


def augmentation_generators(m: GammaModule) -> IntMatrix:
    """Columns spanning ``I M`` (together with the relations)."""
    n = m.ambient_rank
    blocks = [a - IntMatrix.identity(n) for a in m.action[1:]]
    return hstack(*blocks) if blocks else IntMatrix.zeros(n, 0)


def _preimage_lattice(f: IntMatrix, target_relations: IntMatrix) -> IntMatrix:
    """Columns spanning ``{x : f x ∈ span(target_relations)}``."""
    n = f.cols
    k = integer_kernel(hstack(f, target_relations))
    return IntMatrix.from_rows(k.tolist()[:n], k.cols) if k.cols else IntMatrix.zeros(n, 0)


def tate_hm1(m: GammaModule) -> FgAbGroup:
    """Kernel of the norm modulo the augmentation submodule."""
    ker = _preimage_lattice(norm_map(m), m.relations)
    return subquotient(hstack(ker, m.relations), hstack(m.relations, augmentation_generators(m)))


def tate_h0(m: GammaModule) -> FgAbGroup:
    """Invariants modulo norms."""
    n = m.ambient_rank
    invariants = fixed_lattice(m)
    norms = norm_map(m)
    return subquotient(hstack(invariants, m.relations), hstack(m.relations, norms))


def fixed_lattice(m: GammaModule, elements: Sequence[int] | None = None) -> IntMatrix:
    """Columns spanning the preimage in ``Z^n`` of the invariants ``M^H``."""
    n = m.ambient_rank
    elements = list(m.group.elements)[1:] if elements is None else [g for g in elements if g]
    if not elements:
        return IntMatrix.identity(n)
    stacked = vstack(*[m.action[g] - IntMatrix.identity(n) for g in elements])
    rel_block = block_diagonal([m.relations] * len(elements))
    return _preimage_lattice(stacked, rel_block)


# cochains -------------------------------------------------------------------
#
# A k-cochain is a dict from k-tuples of group elements to ambient vectors.
# Normalized cochains vanish whenever an argument is the identity; those
# entries may be omitted.


def normalized_tuples(group: FinGroup, k: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, group.order), repeat=k))


def cochain_value(c: Mapping, key: tuple[int, ...], rank: int) -> list[int]:
    v = c.get(key)
    return list(v) if v is not None else [0] * rank


def coboundary(m: GammaModule, c: Mapping, k: int) -> dict:
    """Inhomogeneous differential of a normalized k-cochain (all tuples)."""
    G = m.group
    n = m.ambient_rank
    out = {}
    for t in itertools.product(G.elements, repeat=k + 1):
        acc = m.act(t[0], cochain_value(c, t[1:], n))
        for i in range(1, k + 1):
            merged = t[:i - 1] + (G.mul(t[i - 1], t[i]),) + t[i + 1:]
            val = cochain_value(c, merged, n)
            sgn = -1 if i % 2 else 1
            acc = [a + sgn * b for a, b in zip(acc, val)]
        val = cochain_value(c, t[:k], n)
        sgn = -1 if (k + 1) % 2 else 1
        acc = [a + sgn * b for a, b in zip(acc, val)]
        out[t] = acc
    return out


def is_cocycle(m: GammaModule, c: Mapping, k: int) -> bool:
    return all(m.is_zero(v) for v in coboundary(m, c, k).values())


def is_normalized(m: GammaModule, c: Mapping) -> bool:
    return all(m.is_zero(v) for key, v in c.items() if 0 in key)


class _PrimaryComplex:
    """The p-primary part of the normalized cochain complex of a finite module.

    Coefficients are ``⊕ Z/p^{a_i}``, embedded in ``(Z/p^e)^r`` by
    multiplying coordinate i by ``p^{e-a_i}``.
    """

    def __init__(self, group: FinGroup, p: int, exps: list[int], action: list[np.ndarray]):
        self.group = group
        self.p = p
        self.exps = exps
        self.e = max(exps)
        self.r = len(exps)
        self.q = p ** self.e
        self.action = action
        self.scale = np.array([p ** (self.e - a) for a in exps], dtype=np.int64)
        self._diff = {}
        self._structures = {}

    def tuple_index(self, t: tuple[int, ...]) -> int:
        n1 = self.group.order - 1
        out = 0
        for g in t:
            out = out * n1 + (g - 1)
        return out

    def differential(self, k: int) -> np.ndarray:
        """Integer matrix of d: C^k -> C^{k+1} on normalized cochains."""
        if k in self._diff:
            return self._diff[k]
        G = self.group
        r = self.r
        n1 = G.order - 1
        rows = n1 ** (k + 1) * r
        cols = n1 ** k * r
        d = np.zeros((rows, cols), dtype=np.int64)
        eye = np.eye(r, dtype=np.int64)
        for t in itertools.product(range(1, G.order), repeat=k + 1):
            ri = self.tuple_index(t) * r
            terms = [(t[1:], self.action[t[0]])]
            for i in range(1, k + 1):
                g = G.mul(t[i - 1], t[i])
                if g:
                    terms.append((t[:i - 1] + (g,) + t[i + 1:], -eye if i % 2 else eye))
            terms.append((t[:k], -eye if (k + 1) % 2 else eye))
            for key, block in terms:
                ci = self.tuple_index(key) * r
                d[ri:ri + r, ci:ci + r] += block
        d %= self.q
        self._diff[k] = d
        return d

    def _row_scale(self, nrows: int) -> np.ndarray:
        return np.tile(self.scale, nrows // self.r)

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Scale coordinate blocks into (Z/p^e)^N; works on vectors or column stacks."""
        s = self._row_scale(x.shape[0])
        return (x * (s[:, None] if x.ndim == 2 else s)) % self.q

    def cocycle_generators(self, k: int) -> np.ndarray:
        d = self.differential(k)
        scaled = (d * self._row_scale(d.shape[0])[:, None]) % self.q
        return zmod.kernel(scaled, self.p, self.e)

    def coboundary_generators(self, k: int) -> np.ndarray:
        if k == 0:
            return np.zeros((self.r, 0), dtype=np.int64)
        return self.differential(k - 1)

    def structure(self, k: int) -> dict:
        if k in self._structures:
            return self._structures[k]
        p, e = self.p, self.e
        z = self.embed(self.cocycle_generators(k))
        b = self.embed(self.coboundary_generators(k))
        log_b = zmod.span_log_size(b, p, e)
        h = []
        for s in range(e + 1):
            stack = np.hstack([(z * p ** s) % self.q, b])
            h.append(zmod.span_log_size(stack, p, e) - log_b)
        factors = []
        for s in range(e):
            at_least = h[s] - h[s + 1]
            more = h[s + 1] - h[s + 2] if s + 2 <= e else 0
            factors += [p ** (s + 1)] * (at_least - more)
        out = {"z": z, "b": b, "log_b": log_b, "log_h": h[0], "factors": sorted(factors)}
        self._structures[k] = out
        return out

    def is_coboundary(self, x: np.ndarray, k: int) -> bool:
        return self.solve_coboundary(x, k) is not None

    def solve_coboundary(self, x: np.ndarray, k: int) -> np.ndarray | None:
        if k == 0:
            return np.zeros(0, dtype=np.int64) if not (self.embed(x) % self.q).any() else None
        d = self.differential(k - 1)
        s = self._row_scale(d.shape[0])
        return zmod.solve((d * s[:, None]) % self.q, (x * s) % self.q, self.p, self.e)

    def span_log_order(self, xs: list[np.ndarray], k: int) -> int:
        """log_p of the order of the subgroup of H^k generated by the cocycles ``xs``."""
        st = self.structure(k)
        if not xs:
            return 0
        gens = np.stack([self.embed(x) for x in xs], axis=1)
        return zmod.span_log_size(np.hstack([gens, st["b"]]), self.p, self.e) - st["log_b"]


class FiniteCohomology:
    """Normalized cochain cohomology ``H^k(Γ, M)`` for a finite module ``M``."""

    def __init__(self, m: GammaModule, bound: int = 12):
        if m.group.order > bound:
            raise OracleOutOfRange(f"group order {m.group.order} exceeds oracle bound {bound}")
        if not m.is_finite:
            raise ValueError("module is not finite")
        self.module = m
        ab = m.abstract
        self.factors = list(ab.invariant_factors)
        self._gens = ab.generators()
        coord_action = m.coordinate_action
        self.parts: list[tuple[list[int], _PrimaryComplex]] = []
        primes = sorted({p for d in self.factors for p, _ in zmod.prime_power_split(d)})
        for p in primes:
            comps = []
            exps = []
            for i, d in enumerate(self.factors):
                a = 0
                while d % p == 0:
                    d //= p
                    a += 1
                if a:
                    comps.append(i)
                    exps.append(a)
            action = [np.array([[row[j] for j in comps] for row in (coord_action[g][i] for i in comps)],
                               dtype=np.int64) for g in m.group.elements]
            self.parts.append((comps, _PrimaryComplex(m.group, p, exps, action)))

    def coordinates(self, c: Mapping, k: int) -> list[np.ndarray]:
        """Per-prime coordinate vectors of a normalized k-cochain."""
        ab = self.module.abstract
        tuples = normalized_tuples(self.module.group, k)
        coords = [ab.coordinates(cochain_value(c, t, self.module.ambient_rank)) for t in tuples]
        out = []
        for comps, part in self.parts:
            x = np.array([[cv[i] % (part.p ** a) for i, a in zip(comps, part.exps)] for cv in coords],
                         dtype=np.int64).reshape(-1)
            out.append(x)
        return out

    def group(self, k: int) -> FgAbGroup:
        factors = []
        for _, part in self.parts:
            factors += part.structure(k)["factors"]
        inv = direct_sum_factors(factors)
        return quotient_presentation(len(inv), IntMatrix.diagonal(inv) if inv else IntMatrix.zeros(0, 0))

    def order(self, k: int) -> int:
        out = 1
        for _, part in self.parts:
            out *= part.p ** part.structure(k)["log_h"]
        return out

    def is_coboundary(self, c: Mapping, k: int) -> bool:
        return all(part.is_coboundary(x, k) for (_, part), x in zip(self.parts, self.coordinates(c, k)))

    def class_span_order(self, cocycles: Sequence[Mapping], k: int) -> int:
        """Order of the subgroup of ``H^k`` generated by the classes of ``cocycles``."""
        coords = [self.coordinates(c, k) for c in cocycles]
        out = 1
        for idx, (_, part) in enumerate(self.parts):
            out *= part.p ** part.span_log_order([cs[idx] for cs in coords], k)
        return out

    def cocycle_generators(self, k: int) -> list[dict]:
        """Normalized k-cocycles (ambient coordinates) spanning ``Z^k``."""
        tuples = normalized_tuples(self.module.group, k)
        ab = self.module.abstract
        out = []
        for comps, part in self.parts:
            z = part.cocycle_generators(k)
            lift = []
            for i, a in zip(comps, part.exps):
                # the residue mod p^a, embedded in Z/d as zero at the other primes
                d = self.factors[i]
                pa = part.p ** a
                rest = d // pa
                lift.append((i, rest * pow(rest, -1, pa) if pa > 1 else 0))
            for j in range(z.shape[1]):
                col = z[:, j].reshape(len(tuples), part.r)
                c = {}
                for ti, t in enumerate(tuples):
                    coords = [0] * len(self.factors)
                    for jj, (i, mult) in enumerate(lift):
                        coords[i] = int(col[ti, jj]) * mult % self.factors[i]
                    if any(coords):
                        c[t] = ab.representative(coords)
                out.append(c)
        return out

    def solve_coboundary(self, c: Mapping, k: int) -> dict | None:
        """A normalized (k-1)-cochain ``b`` with ``db = c``, or None."""
        tuples = normalized_tuples(self.module.group, k - 1)
        sols = []
        for (comps, part), x in zip(self.parts, self.coordinates(c, k)):
            y = part.solve_coboundary(x, k)
            if y is None:
                return None
            sols.append((comps, part, y.reshape(len(tuples), part.r)))
        out = {}
        for ti, t in enumerate(tuples):
            coords = [0] * len(self.factors)
            for i, d in enumerate(self.factors):
                # CRT over the primes dividing d
                val, mod = 0, 1
                for comps, part, y in sols:
                    if i in comps:
                        j = comps.index(i)
                        pa = part.p ** part.exps[j]
                        r = int(y[ti, j]) % pa
                        # combine x = val mod `mod` and x = r mod pa
                        t_ = ((r - val) * pow(mod, -1, pa)) % pa
                        val += mod * t_
                        mod *= pa
                coords[i] = val
            out[t] = self.module.abstract.representative(coords)
        return out


def lattice_h1(m: GammaModule) -> FgAbGroup:
    """``H^1`` for an arbitrary finitely generated module, computed over Z."""
    G = m.group
    n = m.ambient_rank
    n1 = G.order - 1
    if n1 == 0:
        return quotient_presentation(0, IntMatrix.zeros(0, 0))
    t1 = normalized_tuples(G, 1)
    t2 = normalized_tuples(G, 2)
    idx1 = {t: i for i, t in enumerate(t1)}
    d1 = [[0] * (n1 * n) for _ in range(n1 * n1 * n)]
    for ri, (g, h) in enumerate(t2):
        gh = G.mul(g, h)
        terms = [((h,), m.action[g].tolist(), 1), ((g,), None, 1)]
        if gh:
            terms.append(((gh,), None, -1))
        for key, mat, sgn in terms:
            ci = idx1[key] * n
            for a in range(n):
                for b in range(n):
                    x = mat[a][b] if mat is not None else int(a == b)
                    d1[ri * n + a][ci + b] += sgn * x
    D1 = IntMatrix.from_rows(d1, n1 * n)
    D0 = vstack(*[a - IntMatrix.identity(n) for a in m.action[1:]])

    def blockdiag_rel(copies):
        return block_diagonal([m.relations] * copies)

    z = _preimage_lattice(D1, blockdiag_rel(n1 * n1))
    r1 = blockdiag_rel(n1)
    return subquotient(hstack(z, r1), hstack(r1, D0))


def cohomology_brute(m: GammaModule, degree: int, bound: int = 12) -> FgAbGroup:
    """``H^degree(Γ, M)`` from normalized inhomogeneous cochains.

    Finite modules are handled in degrees 1 and 2; modules with a free part
    only in degree 1.
    """
    if m.group.order > bound:
        raise OracleOutOfRange(f"group order {m.group.order} exceeds oracle bound {bound}")
    if degree not in (1, 2):
        raise ValueError("oracle supports degrees 1 and 2")
    if m.is_finite:
        return FiniteCohomology(m, bound).group(degree)
    if degree == 1:
        return lattice_h1(m)
    raise ValueError("degree 2 needs a finite module")
