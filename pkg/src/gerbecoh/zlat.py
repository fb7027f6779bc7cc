"""Exact integer linear algebra.

Matrices hold Python ints, so every computation is exact regardless of
entry growth.  The central object is :class:`FgAbGroup`, a finitely
generated abelian group given as a subquotient ``L / R`` of some ambient
lattice ``Z^n`` together with the coordinate change that maps a vector of
``L`` onto invariant-factor coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence


class DimensionError(ValueError):
    """Matrix or vector shapes do not fit together."""


class NotInLattice(ValueError):
    """A vector was expected to lie in a lattice but does not."""


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0 or self.rows * self.cols != len(self.entries):
            raise DimensionError(f"{self.rows}x{self.cols} matrix cannot hold {len(self.entries)} entries")

    # construction -------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise DimensionError("ragged rows")
        return cls(len(rows), cols, tuple(int(x) for r in rows for x in r))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int | None = None) -> "IntMatrix":
        columns = [list(c) for c in columns]
        if rows is None:
            if not columns:
                raise DimensionError("row count needed for an empty column list")
            rows = len(columns[0])
        for c in columns:
            if len(c) != rows:
                raise DimensionError("ragged columns")
        return cls(rows, len(columns), tuple(int(columns[j][i]) for i in range(rows) for j in range(len(columns))))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def diagonal(cls, values: Sequence[int], rows: int | None = None, cols: int | None = None) -> "IntMatrix":
        rows = len(values) if rows is None else rows
        cols = len(values) if cols is None else cols
        data = [[0] * cols for _ in range(rows)]
        for i, x in enumerate(values):
            data[i][i] = int(x)
        return cls.from_rows(data, cols)

    # access ---------------------------------------------------------------

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def tolist(self) -> list[list[int]]:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    def row(self, i: int) -> list[int]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def column(self, j: int) -> list[int]:
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def columns(self) -> list[list[int]]:
        return [self.column(j) for j in range(self.cols)]

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix.from_rows([self.column(j) for j in range(self.cols)], self.rows)

    def is_zero(self) -> bool:
        return not any(self.entries)

    # arithmetic -------------------------------------------------------------

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            if self.cols != other.rows:
                raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
            a = self.tolist()
            bt = other.T.tolist()
            return IntMatrix.from_rows([[sum(x * y for x, y in zip(r, c)) for c in bt] for r in a], other.cols)
        vec = list(other)
        if len(vec) != self.cols:
            raise DimensionError(f"vector of length {len(vec)} for {self.rows}x{self.cols} matrix")
        return [sum(x * y for x, y in zip(r, vec)) for r in self.tolist()]

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("shape mismatch")
        return IntMatrix(self.rows, self.cols, tuple(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("shape mismatch")
        return IntMatrix(self.rows, self.cols, tuple(x - y for x, y in zip(self.entries, other.entries)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(-x for x in self.entries))

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(k * x for x in self.entries))

    def det(self) -> int:
        if self.rows != self.cols:
            raise DimensionError("determinant of a non-square matrix")
        return _bareiss_det(self.tolist())


def hstack(*blocks: IntMatrix) -> IntMatrix:
    blocks = [b for b in blocks if b is not None]
    rows = blocks[0].rows
    if any(b.rows != rows for b in blocks):
        raise DimensionError("hstack row mismatch")
    data = [sum((b.row(i) for b in blocks), []) for i in range(rows)]
    return IntMatrix.from_rows(data, sum(b.cols for b in blocks))


def vstack(*blocks: IntMatrix) -> IntMatrix:
    blocks = [b for b in blocks if b is not None]
    cols = blocks[0].cols
    if any(b.cols != cols for b in blocks):
        raise DimensionError("vstack column mismatch")
    return IntMatrix.from_rows([r for b in blocks for r in b.tolist()], cols)


def block_diagonal(blocks: Sequence[IntMatrix]) -> IntMatrix:
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    data = [[0] * cols for _ in range(rows)]
    r0 = c0 = 0
    for b in blocks:
        for i, r in enumerate(b.tolist()):
            data[r0 + i][c0:c0 + b.cols] = r
        r0 += b.rows
        c0 += b.cols
    return IntMatrix.from_rows(data, cols)


# Smith normal form -------------------------------------------------------


def _bareiss_det(m: list[list[int]]) -> int:
    n = len(m)
    if n == 0:
        return 1
    a = [row[:] for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _snf(a: list[list[int]], m: int, n: int, want_inverses: bool = False):
    """Core elimination.  Returns u, d, v (and inverses) as lists of rows."""
    a = [row[:] for row in a]
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]
    ui = [r[:] for r in u] if want_inverses else None
    vi = [r[:] for r in v] if want_inverses else None

    def row_swap(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]
        if ui is not None:
            for r in ui:
                r[i], r[j] = r[j], r[i]

    def col_swap(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]
        if vi is not None:
            vi[i], vi[j] = vi[j], vi[i]

    def row_addmul(dst, src, k):
        # row_dst += k * row_src
        if k == 0:
            return
        ra, rs = a[dst], a[src]
        for c in range(n):
            if rs[c]:
                ra[c] += k * rs[c]
        ud, us = u[dst], u[src]
        for c in range(m):
            if us[c]:
                ud[c] += k * us[c]
        if ui is not None:
            for r in ui:
                if r[dst]:
                    r[src] -= k * r[dst]

    def col_addmul(dst, src, k):
        # col_dst += k * col_src
        if k == 0:
            return
        for r in a:
            if r[src]:
                r[dst] += k * r[src]
        for r in v:
            if r[src]:
                r[dst] += k * r[src]
        if vi is not None:
            vd, vs = vi[dst], vi[src]
            for c in range(n):
                if vd[c]:
                    vs[c] -= k * vd[c]

    def row_neg(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]
        if ui is not None:
            for r in ui:
                r[i] = -r[i]

    t = 0
    while t < min(m, n):
        # smallest nonzero entry of the trailing block becomes the pivot
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, pi, pj = best
        if pi != t:
            row_swap(t, pi)
        if pj != t:
            col_swap(t, pj)
        while True:
            p = a[t][t]
            clean = True
            for i in range(t + 1, m):
                if a[i][t]:
                    row_addmul(i, t, -(a[i][t] // p))
                    if a[i][t]:
                        clean = False
            for j in range(t + 1, n):
                if a[t][j]:
                    col_addmul(j, t, -(a[t][j] // p))
                    if a[t][j]:
                        clean = False
            if clean:
                # divisibility: pivot must divide the whole trailing block
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if a[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                row_addmul(t, bad, 1)
                continue
            # move a smaller remainder into the pivot position
            best = (abs(p), t, t)
            for i in range(t + 1, m):
                if a[i][t] and abs(a[i][t]) < best[0]:
                    best = (abs(a[i][t]), i, t)
            for j in range(t + 1, n):
                if a[t][j] and abs(a[t][j]) < best[0]:
                    best = (abs(a[t][j]), t, j)
            _, bi, bj = best
            if bi != t:
                row_swap(t, bi)
            if bj != t:
                col_swap(t, bj)
        if a[t][t] < 0:
            row_neg(t)
        t += 1
    return u, a, v, ui, vi


@dataclass(frozen=True)
class SmithForm:
    """``u @ m @ v == d`` with unimodular ``u``, ``v``."""

    u: IntMatrix
    d: IntMatrix
    v: IntMatrix
    u_inv: IntMatrix
    v_inv: IntMatrix

    @property
    def diagonal(self) -> list[int]:
        return [self.d[i, i] for i in range(min(self.d.rows, self.d.cols))]

    @property
    def rank(self) -> int:
        return sum(1 for x in self.diagonal if x)


def smith_form(m: IntMatrix) -> SmithForm:
    u, d, v, ui, vi = _snf(m.tolist(), m.rows, m.cols, want_inverses=True)
    return SmithForm(
        IntMatrix.from_rows(u, m.rows),
        IntMatrix.from_rows(d, m.cols),
        IntMatrix.from_rows(v, m.cols),
        IntMatrix.from_rows(ui, m.rows),
        IntMatrix.from_rows(vi, m.cols),
    )


def smith_normal_form(m: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(u, d, v)`` with ``u @ m @ v == d``.

    ``u`` and ``v`` are unimodular and ``d`` is diagonal with non-negative
    entries ``d1 | d2 | ...`` (zeros last).
    """
    u, d, v, _, _ = _snf(m.tolist(), m.rows, m.cols)
    return IntMatrix.from_rows(u, m.rows), IntMatrix.from_rows(d, m.cols), IntMatrix.from_rows(v, m.cols)


def is_smith_form(d: IntMatrix) -> bool:
    diag = []
    for i in range(d.rows):
        for j in range(d.cols):
            if i != j and d[i, j]:
                return False
    diag = [d[i, i] for i in range(min(d.rows, d.cols))]
    if any(x < 0 for x in diag):
        return False
    for a, b in zip(diag, diag[1:]):
        if a == 0 and b != 0:
            return False
        if a and b % a:
            return False
    return True


# lattices ------------------------------------------------------------------


class LatticeSolver:
    """Repeated ``a @ x == b`` solves against a fixed matrix."""

    def __init__(self, a: IntMatrix):
        self.a = a
        self._sf = smith_form(a) if a.cols and a.rows else None

    def solve(self, b: Sequence[int]) -> list[int] | None:
        a = self.a
        b = list(b)
        if len(b) != a.rows:
            raise DimensionError(f"right-hand side of length {len(b)} for {a.rows} rows")
        if self._sf is None:
            return [0] * a.cols if not any(b) else None
        sf = self._sf
        ub = sf.u @ b
        y = [0] * a.cols
        for i in range(a.rows):
            di = sf.d[i, i] if i < a.cols else 0
            if di == 0:
                if ub[i]:
                    return None
            elif ub[i] % di:
                return None
            else:
                y[i] = ub[i] // di
        return sf.v @ y


def solve_in_lattice(a: IntMatrix, b: Sequence[int]) -> list[int] | None:
    """Integer solution ``x`` of ``a @ x == b``, or None if there is none."""
    return LatticeSolver(a).solve(b)


def integer_kernel(a: IntMatrix) -> IntMatrix:
    """Basis (as columns) of the saturated lattice ``{x : a @ x == 0}``."""
    if a.rows == 0:
        return IntMatrix.identity(a.cols)
    sf = smith_form(a)
    r = sf.rank
    cols = [sf.v.column(j) for j in range(r, a.cols)]
    return IntMatrix.from_columns(cols, a.cols) if cols else IntMatrix.zeros(a.cols, 0)


def lattice_basis(gens: IntMatrix) -> IntMatrix:
    """A basis (columns, full column rank) of the column span of ``gens``."""
    if gens.cols == 0:
        return IntMatrix.zeros(gens.rows, 0)
    sf = smith_form(gens)
    cols = []
    for i, di in enumerate(sf.diagonal):
        if di:
            cols.append([di * x for x in sf.u_inv.column(i)])
    return IntMatrix.from_columns(cols, gens.rows) if cols else IntMatrix.zeros(gens.rows, 0)


def in_span(gens: IntMatrix, vec: Sequence[int]) -> bool:
    return solve_in_lattice(gens, vec) is not None


def same_span(g1: IntMatrix, g2: IntMatrix) -> bool:
    return all(in_span(g1, c) for c in g2.columns()) and all(in_span(g2, c) for c in g1.columns())


def lattice_index(sub: IntMatrix, n: int | None = None) -> int:
    """Index of the column span of ``sub`` in ``Z^n`` (0 if infinite)."""
    n = sub.rows if n is None else n
    if sub.cols == 0:
        return 1 if n == 0 else 0
    diag = smith_form(sub).diagonal
    if len([x for x in diag if x]) < n:
        return 0
    out = 1
    for x in diag:
        if x:
            out *= x
    return out


# finitely generated abelian groups -----------------------------------------


@dataclass(frozen=True)
class FgAbGroup:
    """The subquotient ``span(basis) / span(relations)`` of ``Z^n``.

    ``invariant_factors`` lists the nontrivial factors ``d1 | d2 | ...``
    (``0`` standing for ``Z``).  ``projection`` maps basis coordinates to
    invariant-factor coordinates; ``lift`` goes back, giving one basis
    coordinate vector per factor.
    """

    invariant_factors: tuple[int, ...]
    projection: IntMatrix
    lift: IntMatrix
    basis: IntMatrix
    relations: IntMatrix

    @property
    def ambient_rank(self) -> int:
        return self.basis.rows

    @property
    def order(self) -> int:
        """Group order, 0 when infinite."""
        out = 1
        for d in self.invariant_factors:
            out *= d
        return out

    @property
    def is_finite(self) -> bool:
        return all(self.invariant_factors)

    @property
    def is_trivial(self) -> bool:
        return not self.invariant_factors

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    @cached_property
    def _solver(self) -> LatticeSolver:
        return LatticeSolver(self.basis)

    def contains(self, vec: Sequence[int]) -> bool:
        return self._solver.solve(vec) is not None

    def coordinates(self, vec: Sequence[int]) -> list[int]:
        """Invariant-factor coordinates of an ambient vector of the subgroup."""
        c = self._solver.solve(vec)
        if c is None:
            raise NotInLattice(f"{list(vec)} is not in the subgroup")
        raw = self.projection @ c
        return [x % d if d else x for x, d in zip(raw, self.invariant_factors)]

    def is_zero(self, vec: Sequence[int]) -> bool:
        return not any(self.coordinates(vec))

    def equal(self, v1: Sequence[int], v2: Sequence[int]) -> bool:
        return self.is_zero([a - b for a, b in zip(v1, v2)])

    def representative(self, coords: Sequence[int]) -> list[int]:
        """An ambient vector with the given invariant-factor coordinates."""
        c = self.lift @ list(coords)
        return self.basis @ c

    def generators(self) -> list[list[int]]:
        return [self.representative([int(i == j) for j in range(len(self.invariant_factors))])
                for i in range(len(self.invariant_factors))]

    def element_order(self, vec: Sequence[int]) -> int:
        """Order of the class of ``vec`` (0 if infinite)."""
        out = 1
        for x, d in zip(self.coordinates(vec), self.invariant_factors):
            if d == 0:
                if x:
                    return 0
                continue
            k = d // gcd(d, x)
            out = out * k // gcd(out, k)
        return out

    def describe(self) -> str:
        if not self.invariant_factors:
            return "0"
        return " + ".join("Z" if d == 0 else f"Z/{d}" for d in self.invariant_factors)


def subquotient(gens: IntMatrix, relations: IntMatrix) -> FgAbGroup:
    """Presentation of ``span(gens) / span(relations)``.

    ``span(relations)`` must lie inside ``span(gens)``.
    """
    if gens.rows != relations.rows:
        raise DimensionError("generators and relations live in different ambient spaces")
    basis = lattice_basis(gens)
    k = basis.cols
    rel_coords = []
    solver = LatticeSolver(basis)
    for col in relations.columns():
        c = solver.solve(col)
        if c is None:
            raise NotInLattice("relation outside the generated subgroup")
        rel_coords.append(c)
    if not rel_coords or k == 0:
        rel = IntMatrix.zeros(k, 0)
        factors = [0] * k
        u = IntMatrix.identity(k)
        u_inv = u
    else:
        rel = IntMatrix.from_columns(rel_coords, k)
        sf = smith_form(rel)
        diag = sf.diagonal + [0] * (k - min(k, rel.cols))
        factors = diag[:k]
        u, u_inv = sf.u, sf.u_inv
    keep = [i for i, d in enumerate(factors) if d != 1]
    projection = IntMatrix.from_rows([u.row(i) for i in keep], k) if keep else IntMatrix.zeros(0, k)
    lift = IntMatrix.from_columns([u_inv.column(i) for i in keep], k) if keep else IntMatrix.zeros(k, 0)
    return FgAbGroup(tuple(factors[i] for i in keep), projection, lift, basis, relations)


def quotient_presentation(ambient_rank: int, relations: IntMatrix | None) -> FgAbGroup:
    """``Z^ambient_rank`` modulo the column span of ``relations``."""
    if relations is None:
        relations = IntMatrix.zeros(ambient_rank, 0)
    if relations.rows != ambient_rank:
        raise DimensionError("relations must have ambient_rank rows")
    return subquotient(IntMatrix.identity(ambient_rank), relations)


def torsion_part(g: FgAbGroup) -> tuple[FgAbGroup, IntMatrix]:
    """The torsion subgroup of ``g`` and ambient generators for it.

    The generators (columns of the returned matrix) are representatives of
    the finite invariant factors, so they realise the inclusion.
    """
    tor_idx = [i for i, d in enumerate(g.invariant_factors) if d]
    reps = [g.representative([int(i == j) for j in range(len(g.invariant_factors))]) for i in tor_idx]
    n = g.ambient_rank
    witness = IntMatrix.from_columns(reps, n) if reps else IntMatrix.zeros(n, 0)
    gens = hstack(g.relations, witness) if g.relations.cols or witness.cols else IntMatrix.zeros(n, 0)
    return subquotient(gens, g.relations), witness


def direct_sum_factors(factors: Iterable[int]) -> tuple[int, ...]:
    """Invariant factors of a direct sum of cyclic groups ``Z/f``."""
    fs = [f for f in factors if f != 1]
    if not fs:
        return ()
    g = quotient_presentation(len(fs), IntMatrix.diagonal(fs))
    return g.invariant_factors
