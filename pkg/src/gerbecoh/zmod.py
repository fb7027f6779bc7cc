"""Linear algebra over the chain ring Z/p^e.

Every ideal of Z/p^e is generated by a power of p, so elimination that
always pivots on an entry of least p-adic valuation brings any matrix to
diagonal form ``diag(p^v1, p^v2, ...)`` with ``v1 <= v2 <= ...``.  Only the
column transform is kept; row operations are applied to an optional
right-hand side instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def prime_power_split(n: int) -> list[tuple[int, int]]:
    """``n`` as a list of ``(p, e)`` pairs."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def valuation(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass
class Elimination:
    """Result of diagonalising ``a`` over Z/p^e.

    ``valuations[t]`` is the valuation of the t-th pivot; ``v`` is the
    column transform, so ``row_ops(a) @ v`` is diagonal.  ``rhs`` holds the
    right-hand side after the same row operations.
    """

    p: int
    e: int
    valuations: list[int]
    v: np.ndarray
    rhs: np.ndarray | None

    @property
    def rank(self) -> int:
        return len(self.valuations)


def _valuation_table(p: int, e: int) -> np.ndarray:
    # table[x] = v_p(x) for 0 < x < p^e, and e for x == 0
    table = np.zeros(p ** e, dtype=np.int64)
    for k in range(1, e):
        table[:: p ** k] = k
    table[0] = e
    return table


def eliminate(a: np.ndarray, p: int, e: int, rhs: np.ndarray | None = None, track: bool = True) -> Elimination:
    q = p ** e
    a = np.array(a, dtype=np.int64) % q
    m, n = a.shape
    if rhs is not None:
        rhs = np.array(rhs, dtype=np.int64).reshape(m, -1) % q
    v = np.eye(n, dtype=np.int64) if track else None
    vals = _valuation_table(p, e)
    inverses = {}
    pivots = []
    for t in range(min(m, n)):
        block = a[t:, t:]
        vb = vals[block]
        flat = int(np.argmin(vb))
        k = int(vb.flat[flat])
        if k >= e:
            break
        i, j = divmod(flat, n - t)
        i += t
        j += t
        if i != t:
            a[[t, i]] = a[[i, t]]
            if rhs is not None:
                rhs[[t, i]] = rhs[[i, t]]
        if j != t:
            a[:, [t, j]] = a[:, [j, t]]
            if track:
                v[:, [t, j]] = v[:, [j, t]]
        piv = int(a[t, t])
        unit = piv // p ** k
        if unit != 1:
            inv = inverses.get(unit)
            if inv is None:
                inv = pow(unit, -1, q)
                inverses[unit] = inv
            a[t] = (a[t] * inv) % q
            if rhs is not None:
                rhs[t] = (rhs[t] * inv) % q
        pk = p ** k
        col = a[t + 1:, t]
        nz = np.nonzero(col)[0]
        if nz.size:
            factors = (col[nz] // pk)[:, None]
            rows = nz + t + 1
            a[rows, t:] = (a[rows, t:] - factors * a[t, t:]) % q
            if rhs is not None:
                rhs[rows] = (rhs[rows] - factors * rhs[t]) % q
        row = a[t, t + 1:]
        nz = np.nonzero(row)[0]
        if nz.size:
            factors = row[nz] // pk
            cols = nz + t + 1
            if track:
                v[:, cols] = (v[:, cols] - v[:, [t]] * factors[None, :]) % q
            a[t, cols] = 0
        pivots.append(k)
    return Elimination(p, e, pivots, v, rhs)


def kernel(a: np.ndarray, p: int, e: int) -> np.ndarray:
    """Generators (columns) of ``{x : a x = 0}`` in (Z/p^e)^n."""
    a = np.asarray(a, dtype=np.int64)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=np.int64)
    el = eliminate(a, p, e)
    q = p ** e
    cols = []
    for t, k in enumerate(el.valuations):
        if k > 0:
            cols.append((el.v[:, t] * p ** (e - k)) % q)
    for t in range(el.rank, n):
        cols.append(el.v[:, t])
    if not cols:
        return np.zeros((n, 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def solve(a: np.ndarray, b: np.ndarray, p: int, e: int) -> np.ndarray | None:
    """Some ``x`` with ``a x = b`` over Z/p^e, or None."""
    a = np.asarray(a, dtype=np.int64)
    m, n = a.shape
    q = p ** e
    b = np.asarray(b, dtype=np.int64).reshape(m) % q
    if n == 0:
        return np.zeros(0, dtype=np.int64) if not b.any() else None
    el = eliminate(a, p, e, rhs=b)
    r = el.rhs[:, 0]
    y = np.zeros(n, dtype=np.int64)
    for t, k in enumerate(el.valuations):
        x = int(r[t])
        pk = p ** k
        if x % pk:
            return None
        y[t] = x // pk
    if r[el.rank:].any():
        return None
    return (el.v @ y) % q


def span_log_size(gens: np.ndarray, p: int, e: int) -> int:
    """log_p of the size of the submodule spanned by the columns of ``gens``."""
    gens = np.asarray(gens, dtype=np.int64)
    if gens.size == 0:
        return 0
    el = eliminate(gens, p, e, track=False)
    return sum(e - k for k in el.valuations)


# composite moduli via CRT ----------------------------------------------------


def _crt_embed(x: np.ndarray, q: int, n: int) -> np.ndarray:
    """The vector congruent to ``x`` mod ``q`` and to 0 mod ``n // q``."""
    rest = n // q
    coef = rest * pow(rest, -1, q) if q > 1 else 0
    return (x.astype(object) * coef % n).astype(np.int64)


def kernel_mod(a: np.ndarray, n: int) -> np.ndarray:
    """Generators (columns) of ``{x : a x = 0}`` in (Z/n)^k."""
    a = np.asarray(a, dtype=np.int64)
    k = a.shape[1]
    if n == 1:
        return np.zeros((k, 0), dtype=np.int64)
    cols = []
    for p, e in prime_power_split(n):
        ker = kernel(a % p ** e, p, e)
        for j in range(ker.shape[1]):
            cols.append(_crt_embed(ker[:, j], p ** e, n))
    if not cols:
        return np.zeros((k, 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def span_order_mod(gens: np.ndarray, n: int) -> int:
    """Order of the subgroup of (Z/n)^k spanned by the columns of ``gens``."""
    gens = np.asarray(gens, dtype=np.int64)
    out = 1
    for p, e in prime_power_split(n):
        out *= p ** span_log_size(gens % p ** e, p, e)
    return out


def solve_mod(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray | None:
    """Some ``x`` with ``a x = b`` in (Z/n)^k, or None."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    x = np.zeros(a.shape[1], dtype=np.int64)
    for p, e in prime_power_split(n):
        q = p ** e
        y = solve(a % q, b % q, p, e)
        if y is None:
            return None
        x = (x + _crt_embed(y, q, n)) % n
    return x


def in_span_mod(gens: np.ndarray, vec: np.ndarray, n: int) -> bool:
    gens = np.asarray(gens, dtype=np.int64)
    if gens.shape[1] == 0:
        return not (np.asarray(vec) % n).any()
    return solve_mod(gens, vec, n) is not None
