"""Exact linear algebra over Z, Q and prime fields.

This module contains the arithmetic kernel used everywhere else:

* ``smith_normal_form`` computes D = U*A*V over Z with unimodular U, V,
  a divisibility chain on the diagonal, and a deterministic pivoting rule
  (entry of minimal nonzero absolute value, ties broken by (row, col)).
* ``complex_homology`` evaluates the homology of a bounded free chain
  complex, reporting free ranks and invariant factors over Z and ranks
  over Q or F_p.
* ``contraction`` produces explicit (include, project, homotopy) data
  retracting a complex onto its homology, by cancelling unit pivots after
  a normal-form change of basis per differential.
* ``perturb_transfer`` corrects the differential on a direct sum of
  contracted blocks by the terminating series p*delta*(h*delta)^j*i.

All entries are Python ints or Fractions; there is no floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class InvalidComplex(Exception):
    """Raised when consecutive differentials do not compose to zero."""


class TorsionObstruction(Exception):
    """Raised when integral homology torsion prevents a Z-split contraction."""


class NonNilpotent(Exception):
    """Raised when the perturbation series fails to terminate in the stated bound."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class CoefficientRing:
    """One of the implemented coefficient rings: Z, Q, or F_p.

    ``kind`` is "Z", "Q" or "Fp"; ``p`` is set only for prime fields.
    """

    kind: str
    p: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("Z", "Q", "Fp"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "Fp":
            if self.p is None or not _is_prime(self.p):
                raise ValueError(f"modulus {self.p!r} is not prime")
        elif self.p is not None:
            raise ValueError("modulus only allowed for prime fields")

    @staticmethod
    def integers() -> "CoefficientRing":
        return CoefficientRing("Z")

    @staticmethod
    def rationals() -> "CoefficientRing":
        return CoefficientRing("Q")

    @staticmethod
    def prime_field(p: int) -> "CoefficientRing":
        return CoefficientRing("Fp", p)

    @staticmethod
    def parse(text: str) -> "CoefficientRing":
        """Parse "Z", "Q" or "Fp:<p>" as used by the command line."""
        if text == "Z":
            return CoefficientRing.integers()
        if text == "Q":
            return CoefficientRing.rationals()
        if text.startswith("Fp:"):
            return CoefficientRing.prime_field(int(text[3:]))
        raise ValueError(f"unknown ring {text!r}")

    @property
    def is_field(self) -> bool:
        return self.kind != "Z"

    @property
    def label(self) -> str:
        return self.kind if self.p is None else f"Fp:{self.p}"

    def normalize(self, x):
        if self.kind == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"{x} is not an integer")
                return int(x)
            return int(x)
        if self.kind == "Q":
            return Fraction(x)
        return int(x) % self.p

    def is_zero(self, x) -> bool:
        return self.normalize(x) == 0

    def is_unit(self, x) -> bool:
        x = self.normalize(x)
        if self.kind == "Z":
            return x in (1, -1)
        return x != 0

    def inv(self, x):
        x = self.normalize(x)
        if self.kind == "Z":
            if x not in (1, -1):
                raise ValueError(f"{x} is not a unit in Z")
            return x
        if self.kind == "Q":
            return Fraction(1) / x
        return pow(x, self.p - 2, self.p)


ZZ = CoefficientRing.integers()
QQ = CoefficientRing.rationals()


def GF(p: int) -> CoefficientRing:
    return CoefficientRing.prime_field(p)


class Matrix:
    """Immutable dense matrix with exact entries (int or Fraction)."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: tuple):
        self.rows = rows
        self.cols = cols
        self.data = data

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "Matrix":
        data = tuple(tuple(row) for row in rows)
        ncols = len(data[0]) if data else 0
        if any(len(row) != ncols for row in data):
            raise ValueError("ragged rows")
        return cls(len(data), ncols, data)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data))

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols}, {list(map(list, self.data))})"

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        ot = list(zip(*other.data)) if other.data else []
        out = []
        for row in self.data:
            out.append(tuple(sum(a * b for a, b in zip(row, col)) for col in ot)
                       if ot else (0,) * other.cols)
        return Matrix(self.rows, other.cols, tuple(out))

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in addition")
        return Matrix(self.rows, self.cols,
                      tuple(tuple(a + b for a, b in zip(r1, r2))
                            for r1, r2 in zip(self.data, other.data)))

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + other.scale(-1)

    def __neg__(self) -> "Matrix":
        return self.scale(-1)

    def scale(self, c) -> "Matrix":
        return Matrix(self.rows, self.cols,
                      tuple(tuple(c * a for a in row) for row in self.data))

    def transpose(self) -> "Matrix":
        return Matrix(self.cols, self.rows, tuple(zip(*self.data)) if self.data else ())

    def is_zero(self) -> bool:
        return all(a == 0 for row in self.data for a in row)

    def map(self, f) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(tuple(f(a) for a in row) for row in self.data))

    def normalized(self, ring: CoefficientRing) -> "Matrix":
        return self.map(ring.normalize)

    def is_zero_mod(self, ring: CoefficientRing) -> bool:
        return self.normalized(ring).is_zero()

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        return Matrix(len(row_idx), len(col_idx),
                      tuple(tuple(self.data[i][j] for j in col_idx) for i in row_idx))

    def det(self):
        """Exact determinant via rational elimination; int when integral."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        m = [[Fraction(a) for a in row] for row in self.data]
        sign = 1
        for t in range(n):
            piv = next((i for i in range(t, n) if m[i][t] != 0), None)
            if piv is None:
                return 0
            if piv != t:
                m[t], m[piv] = m[piv], m[t]
                sign = -sign
            for i in range(t + 1, n):
                q = m[i][t] / m[t][t]
                if q:
                    m[i] = [a - q * b for a, b in zip(m[i], m[t])]
        result = Fraction(sign)
        for t in range(n):
            result *= m[t][t]
        return int(result) if result.denominator == 1 else result


def field_rank(A: Matrix, ring: CoefficientRing) -> int:
    """Rank of A over the given field (Q or F_p) by exact elimination."""
    if not ring.is_field:
        raise ValueError("field_rank needs a field")
    m = [[ring.normalize(a) for a in row] for row in A.data]
    rank = 0
    rows, cols = A.rows, A.cols
    for j in range(cols):
        piv = next((i for i in range(rank, rows) if m[i][j] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = ring.inv(m[rank][j])
        m[rank] = [ring.normalize(inv * a) for a in m[rank]]
        for i in range(rows):
            if i != rank and m[i][j] != 0:
                c = m[i][j]
                m[i] = [ring.normalize(a - c * b) for a, b in zip(m[i], m[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


def rational_nullspace(A: Matrix) -> list[list[Fraction]]:
    """Basis of the right nullspace of A over Q."""
    rows, cols = A.rows, A.cols
    m = [[Fraction(a) for a in row] for row in A.data]
    pivots: list[int] = []
    r = 0
    for j in range(cols):
        piv = next((i for i in range(r, rows) if m[i][j] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Fraction(1) / m[r][j]
        m[r] = [inv * a for a in m[r]]
        for i in range(rows):
            if i != r and m[i][j] != 0:
                c = m[i][j]
                m[i] = [a - c * b for a, b in zip(m[i], m[r])]
        pivots.append(j)
        r += 1
        if r == rows:
            break
    basis = []
    free = [j for j in range(cols) if j not in pivots]
    for j in free:
        v = [Fraction(0)] * cols
        v[j] = Fraction(1)
        for i, pj in enumerate(pivots):
            v[pj] = -m[i][j]
        basis.append(v)
    return basis


def _nearest_quotient(a: int, b: int) -> int:
    # minimizes |a - q*b|; remainder magnitude at most |b|/2 forces progress
    q = a // b
    r = a - q * b
    if 2 * abs(r) > abs(b):
        return q + 1
    return q


def _smith_with_inverses(A: Matrix):
    """Smith decomposition with tracked transforms and their inverses.

    Returns (U, Uinv, D, V, Vinv) with D = U*A*V, U*Uinv = I, V*Vinv = I,
    D diagonal with non-negative entries in a divisibility chain.
    """
    r, c = A.rows, A.cols
    D = [list(row) for row in A.data]
    U = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    Ui = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    V = [[1 if i == j else 0 for j in range(c)] for i in range(c)]
    Vi = [[1 if i == j else 0 for j in range(c)] for i in range(c)]

    def row_op(i, t, q):
        # row_i -= q*row_t
        D[i] = [a - q * b for a, b in zip(D[i], D[t])]
        U[i] = [a - q * b for a, b in zip(U[i], U[t])]
        for k in range(r):
            Ui[k][t] += q * Ui[k][i]

    def col_op(j, t, q):
        # col_j -= q*col_t
        for i in range(r):
            D[i][j] -= q * D[i][t]
        for i in range(c):
            V[i][j] -= q * V[i][t]
        Vi[t] = [a + q * b for a, b in zip(Vi[t], Vi[j])]

    def row_swap(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]
        for k in range(r):
            Ui[k][i], Ui[k][j] = Ui[k][j], Ui[k][i]

    def col_swap(i, j):
        for k in range(r):
            D[k][i], D[k][j] = D[k][j], D[k][i]
        for k in range(c):
            V[k][i], V[k][j] = V[k][j], V[k][i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def row_negate(i):
        D[i] = [-a for a in D[i]]
        U[i] = [-a for a in U[i]]
        for k in range(r):
            Ui[k][i] = -Ui[k][i]

    t = 0
    n = min(r, c)
    while t < n:
        best = None
        for i in range(t, r):
            for j in range(t, c):
                v = abs(D[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        _, pi, pj = best
        if pi != t:
            row_swap(pi, t)
        if pj != t:
            col_swap(pj, t)
        dirty = False
        for i in range(t + 1, r):
            if D[i][t]:
                row_op(i, t, _nearest_quotient(D[i][t], D[t][t]))
                if D[i][t]:
                    dirty = True
        for j in range(t + 1, c):
            if D[t][j]:
                col_op(j, t, _nearest_quotient(D[t][j], D[t][t]))
                if D[t][j]:
                    dirty = True
        if dirty:
            continue
        piv = D[t][t]
        bad = next(((i, j) for i in range(t + 1, r) for j in range(t + 1, c)
                    if D[i][j] % piv), None)
        if bad is not None:
            row_op(t, bad[0], -1)
            continue
        t += 1
    for i in range(n):
        if D[i][i] < 0:
            row_negate(i)
    wrap = Matrix.from_rows
    return wrap(U), wrap(Ui), wrap(D), wrap(V), wrap(Vi)


def smith_normal_form(A: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    """Smith normal form of an integer matrix.

    Returns (U, D, V) with D = U @ A @ V, U and V unimodular, D diagonal
    with non-negative entries d_1 | d_2 | ... Pivots are chosen with
    minimal nonzero absolute value, ties broken in (row, col) order, so
    the transforms are reproducible across runs.
    """
    U, _, D, V, _ = _smith_with_inverses(A)
    return U, D, V


def invariant_factors(A: Matrix) -> list[int]:
    """Nonzero diagonal of the Smith form (no transform bookkeeping)."""
    r, c = A.rows, A.cols
    D = [list(row) for row in A.data]
    t = 0
    n = min(r, c)
    while t < n:
        best = None
        for i in range(t, r):
            for j in range(t, c):
                v = abs(D[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        _, pi, pj = best
        if pi != t:
            D[pi], D[t] = D[t], D[pi]
        if pj != t:
            for row in D:
                row[pj], row[t] = row[t], row[pj]
        dirty = False
        for i in range(t + 1, r):
            if D[i][t]:
                q = _nearest_quotient(D[i][t], D[t][t])
                D[i] = [a - q * b for a, b in zip(D[i], D[t])]
                if D[i][t]:
                    dirty = True
        for j in range(t + 1, c):
            if D[t][j]:
                q = _nearest_quotient(D[t][j], D[t][t])
                for i in range(r):
                    D[i][j] -= q * D[i][t]
                if D[t][j]:
                    dirty = True
        if dirty:
            continue
        piv = D[t][t]
        bad = next(((i, j) for i in range(t + 1, r) for j in range(t + 1, c)
                    if D[i][j] % piv), None)
        if bad is not None:
            D[t] = [a + b for a, b in zip(D[t], D[bad[0]])]
            continue
        t += 1
    return [abs(D[i][i]) for i in range(n) if D[i][i] != 0]


def _field_diagonalize(A: Matrix, ring: CoefficientRing):
    """Counterpart of the Smith decomposition over a field: D has unit pivots."""
    r, c = A.rows, A.cols
    nz = ring.normalize
    D = [[nz(a) for a in row] for row in A.data]
    U = [[nz(1 if i == j else 0) for j in range(r)] for i in range(r)]
    Ui = [row[:] for row in U]
    V = [[nz(1 if i == j else 0) for j in range(c)] for i in range(c)]
    Vi = [row[:] for row in V]
    t = 0
    n = min(r, c)
    while t < n:
        piv = next(((i, j) for i in range(t, r) for j in range(t, c) if D[i][j] != 0), None)
        if piv is None:
            break
        pi, pj = piv
        if pi != t:
            D[t], D[pi] = D[pi], D[t]
            U[t], U[pi] = U[pi], U[t]
            for k in range(r):
                Ui[k][t], Ui[k][pi] = Ui[k][pi], Ui[k][t]
        if pj != t:
            for k in range(r):
                D[k][t], D[k][pj] = D[k][pj], D[k][t]
            for k in range(c):
                V[k][t], V[k][pj] = V[k][pj], V[k][t]
            Vi[t], Vi[pj] = Vi[pj], Vi[t]
        piv_val = D[t][t]
        inv = ring.inv(piv_val)
        D[t] = [nz(inv * a) for a in D[t]]
        U[t] = [nz(inv * a) for a in U[t]]
        for k in range(r):
            Ui[k][t] = nz(Ui[k][t] * piv_val)
        for i in range(r):
            if i != t and D[i][t] != 0:
                q = D[i][t]
                D[i] = [nz(a - q * b) for a, b in zip(D[i], D[t])]
                U[i] = [nz(a - q * b) for a, b in zip(U[i], U[t])]
                for k in range(r):
                    Ui[k][t] = nz(Ui[k][t] + q * Ui[k][i])
        for j in range(c):
            if j != t and D[t][j] != 0:
                q = D[t][j]
                for i in range(r):
                    D[i][j] = nz(D[i][j] - q * D[i][t])
                for i in range(c):
                    V[i][j] = nz(V[i][j] - q * V[i][t])
                Vi[t] = [nz(a + q * b) for a, b in zip(Vi[t], Vi[j])]
        t += 1
    wrap = Matrix.from_rows
    return wrap(U), wrap(Ui), wrap(D), wrap(V), wrap(Vi)


@dataclass(frozen=True)
class FreeChainComplex:
    """Bounded complex of finite free modules; differentials lower degree by 1.

    ``ranks[d - lo]`` is the rank in degree d; ``diffs[d - lo - 1]`` is the
    matrix of the differential from degree d to degree d-1.
    """

    lo: int
    hi: int
    ranks: tuple[int, ...]
    diffs: tuple[Matrix, ...]

    def __post_init__(self) -> None:
        if self.hi < self.lo:
            if self.ranks or self.diffs:
                raise ValueError("empty complex must have no data")
            return
        if len(self.ranks) != self.hi - self.lo + 1:
            raise ValueError("rank list does not match degree range")
        if len(self.diffs) != max(self.hi - self.lo, 0):
            raise ValueError("differential list does not match degree range")
        for d in range(self.lo + 1, self.hi + 1):
            m = self.diffs[d - self.lo - 1]
            if (m.rows, m.cols) != (self.ranks[d - 1 - self.lo], self.ranks[d - self.lo]):
                raise ValueError(f"differential at degree {d} has the wrong shape")

    @classmethod
    def empty(cls) -> "FreeChainComplex":
        return cls(0, -1, (), ())

    @classmethod
    def from_dicts(cls, ranks: Mapping[int, int], diffs: Mapping[int, Matrix]) -> "FreeChainComplex":
        if not ranks:
            return cls.empty()
        lo, hi = min(ranks), max(ranks)
        rank_t = tuple(ranks.get(d, 0) for d in range(lo, hi + 1))
        diff_t = tuple(
            diffs.get(d, Matrix.zeros(rank_t[d - 1 - lo], rank_t[d - lo]))
            for d in range(lo + 1, hi + 1)
        )
        return cls(lo, hi, rank_t, diff_t)

    def rank(self, d: int) -> int:
        if self.lo <= d <= self.hi:
            return self.ranks[d - self.lo]
        return 0

    def diff(self, d: int) -> Matrix:
        """Matrix of the differential from degree d to d-1 (zero off range)."""
        if self.lo < d <= self.hi:
            return self.diffs[d - self.lo - 1]
        return Matrix.zeros(self.rank(d - 1), self.rank(d))

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def total_rank(self) -> int:
        return sum(self.ranks)

    def shifted(self, j: int) -> "FreeChainComplex":
        """Reindex degrees by +j without touching the differentials."""
        if self.hi < self.lo:
            return self
        return FreeChainComplex(self.lo + j, self.hi + j, self.ranks, self.diffs)

    def dd_is_zero(self, ring: CoefficientRing = ZZ) -> bool:
        for d in range(self.lo + 2, self.hi + 1):
            if not (self.diff(d - 1) @ self.diff(d)).is_zero_mod(ring):
                return False
        return True


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _merge_invariant_factors(lists: Iterable[Sequence[int]]) -> tuple[int, ...]:
    # canonical divisor chain of a direct sum: per prime, sort exponent
    # multiset descending, then multiply across primes positionwise
    by_prime: dict[int, list[int]] = {}
    for factors in lists:
        for f in factors:
            for p, e in _factor(f).items():
                by_prime.setdefault(p, []).append(e)
    if not by_prime:
        return ()
    for p in by_prime:
        by_prime[p].sort(reverse=True)
    width = max(len(v) for v in by_prime.values())
    chain = []
    for i in range(width):
        f = 1
        for p, exps in by_prime.items():
            if i < len(exps):
                f *= p ** exps[i]
        chain.append(f)
    chain.reverse()  # ascending, each dividing the next
    return tuple(chain)


@dataclass(frozen=True)
class HomologyResult:
    """Homology groups keyed by degree: free rank plus invariant factors."""

    groups: tuple[tuple[int, int, tuple[int, ...]], ...]

    @classmethod
    def from_dict(cls, data: Mapping[int, tuple[int, Sequence[int]]]) -> "HomologyResult":
        items = []
        for d in sorted(data):
            free, torsion = data[d]
            torsion = tuple(torsion)
            if free or torsion:
                items.append((d, free, torsion))
        return cls(tuple(items))

    @classmethod
    def zero(cls) -> "HomologyResult":
        return cls(())

    def as_dict(self) -> dict[int, tuple[int, tuple[int, ...]]]:
        return {d: (free, torsion) for d, free, torsion in self.groups}

    def free_rank(self, d: int) -> int:
        for deg, free, _ in self.groups:
            if deg == d:
                return free
        return 0

    def torsion(self, d: int) -> tuple[int, ...]:
        for deg, _, torsion in self.groups:
            if deg == d:
                return torsion
        return ()

    def degrees(self) -> tuple[int, ...]:
        return tuple(d for d, _, _ in self.groups)

    def is_zero(self) -> bool:
        return not self.groups

    def shifted(self, j: int) -> "HomologyResult":
        return HomologyResult(tuple((d + j, free, torsion) for d, free, torsion in self.groups))

    def direct_sum(self, other: "HomologyResult") -> "HomologyResult":
        data: dict[int, tuple[int, tuple[int, ...]]] = {}
        for d in sorted(set(self.degrees()) | set(other.degrees())):
            free = self.free_rank(d) + other.free_rank(d)
            torsion = _merge_invariant_factors([self.torsion(d), other.torsion(d)])
            data[d] = (free, torsion)
        return HomologyResult.from_dict(data)

    def euler_characteristic(self) -> int:
        # parity, not exponentiation: degrees may be negative
        return sum(-free if d % 2 else free for d, free, _ in self.groups)


def complex_homology(C: FreeChainComplex, ring: CoefficientRing = ZZ) -> HomologyResult:
    """Homology of a bounded free complex over Z, Q or F_p.

    Over Z the free rank and invariant factors come from Smith forms of the
    adjacent differentials; over a field, ranks come from exact row
    reduction. Raises InvalidComplex when d∘d != 0 over the ring.
    """
    for d in range(C.lo + 2, C.hi + 1):
        if not (C.diff(d - 1) @ C.diff(d)).is_zero_mod(ring):
            raise InvalidComplex(f"d∘d != 0 between degrees {d} and {d - 2}")
    rank_of: dict[int, int] = {}
    torsion_of: dict[int, tuple[int, ...]] = {}
    for d in range(C.lo + 1, C.hi + 1):
        m = C.diff(d)
        if ring.is_field:
            rank_of[d] = field_rank(m, ring) if m.rows and m.cols else 0
            torsion_of[d] = ()
        else:
            factors = invariant_factors(m) if m.rows and m.cols else []
            rank_of[d] = len(factors)
            torsion_of[d] = tuple(f for f in factors if f > 1)
    data = {}
    for d in C.degrees():
        free = C.rank(d) - rank_of.get(d, 0) - rank_of.get(d + 1, 0)
        if free < 0:
            raise InvalidComplex(f"negative rank at degree {d}; differentials inconsistent")
        data[d] = (free, torsion_of.get(d + 1, ()))
    return HomologyResult.from_dict(data)


@dataclass(frozen=True)
class Contraction:
    """Retraction of ``ambient`` onto ``small`` with explicit homotopy.

    include (i), project (p) and homotopy (h) are stored per degree of the
    ambient range and satisfy p∘i = 1, 1 - i∘p = d∘h + h∘d together with
    the side conditions h∘i = 0, p∘h = 0, h∘h = 0. ``small`` always has
    zero differential here.
    """

    ambient: FreeChainComplex
    small: FreeChainComplex
    include: tuple[Matrix, ...]
    project: tuple[Matrix, ...]
    homotopy: tuple[Matrix, ...]

    def include_at(self, d: int) -> Matrix:
        if self.ambient.lo <= d <= self.ambient.hi:
            return self.include[d - self.ambient.lo]
        return Matrix.zeros(self.ambient.rank(d), self.small.rank(d))

    def project_at(self, d: int) -> Matrix:
        if self.ambient.lo <= d <= self.ambient.hi:
            return self.project[d - self.ambient.lo]
        return Matrix.zeros(self.small.rank(d), self.ambient.rank(d))

    def homotopy_at(self, d: int) -> Matrix:
        if self.ambient.lo <= d <= self.ambient.hi:
            return self.homotopy[d - self.ambient.lo]
        return Matrix.zeros(self.ambient.rank(d + 1), self.ambient.rank(d))

    def shifted(self, j: int) -> "Contraction":
        """The same contraction with all degrees reindexed by +j."""
        return Contraction(self.ambient.shifted(j), self.small.shifted(j),
                           self.include, self.project, self.homotopy)

    def verify(self, ring: CoefficientRing = ZZ) -> None:
        """Check all five contraction identities as literal matrix equations."""
        amb, sm = self.ambient, self.small
        for d in amb.degrees():
            i, p, h = self.include_at(d), self.project_at(d), self.homotopy_at(d)
            if not (p @ i - Matrix.identity(sm.rank(d))).is_zero_mod(ring):
                raise AssertionError(f"p∘i != 1 at degree {d}")
            lhs = Matrix.identity(amb.rank(d)) - i @ p
            rhs = amb.diff(d + 1) @ h + self.homotopy_at(d - 1) @ amb.diff(d)
            if not (lhs - rhs).is_zero_mod(ring):
                raise AssertionError(f"1 - i∘p != dh + hd at degree {d}")
            if not (h @ i).is_zero_mod(ring):
                raise AssertionError(f"h∘i != 0 at degree {d}")
            if not (self.project_at(d + 1) @ h).is_zero_mod(ring):
                raise AssertionError(f"p∘h != 0 at degree {d}")
            if not (self.homotopy_at(d + 1) @ h).is_zero_mod(ring):
                raise AssertionError(f"h∘h != 0 at degree {d}")


def contraction(C: FreeChainComplex, ring: CoefficientRing = ZZ) -> Contraction:
    """Contract C onto its homology.

    Works degree by degree: bring the differential to normal form (Smith
    over Z, unit-pivot diagonal over a field), then cancel every unit
    pivot pair. Over Z a leftover invariant factor > 1 means integral
    homology torsion and raises TorsionObstruction instead of guessing a
    non-integral splitting.
    """
    if C.hi < C.lo:
        e = FreeChainComplex.empty()
        return Contraction(e, e, (), (), ())
    lo, hi = C.lo, C.hi
    ranks = {d: C.rank(d) for d in C.degrees()}
    diffs = {d: C.diff(d) for d in range(lo + 1, hi + 1)}
    inc = {d: Matrix.identity(ranks[d]) for d in C.degrees()}
    proj = {d: Matrix.identity(ranks[d]) for d in C.degrees()}
    homot = {d: Matrix.zeros(C.rank(d + 1), C.rank(d)) for d in C.degrees()}

    def cur_diff(d: int) -> Matrix:
        if lo < d <= hi:
            return diffs[d]
        return Matrix.zeros(ranks.get(d - 1, 0), ranks.get(d, 0))

    def set_diff(d: int, m: Matrix) -> None:
        if lo < d <= hi:
            diffs[d] = m

    def apply_iso(d: int, V, Vinv, Uinv, U) -> None:
        # change of basis: degree d by V, degree d-1 by U
        inc[d] = inc[d] @ V
        proj[d] = Vinv @ proj[d]
        inc[d - 1] = inc[d - 1] @ Uinv
        proj[d - 1] = U @ proj[d - 1]
        set_diff(d + 1, Vinv @ cur_diff(d + 1))
        set_diff(d - 1, cur_diff(d - 1) @ Uinv)

    def cancel(d: int, b: int, y: int) -> None:
        # cancel the unit pivot at (row y, col b) of the differential d -> d-1
        M = cur_diff(d)
        phi = M[y, b]
        phi_inv = ring.inv(phi)
        rows = [i for i in range(M.rows) if i != y]
        cols = [j for j in range(M.cols) if j != b]
        gamma = M.submatrix(rows, [b])
        delta = M.submatrix([y], cols)
        eps = M.submatrix(rows, cols)
        set_diff(d, (eps - gamma.scale(phi_inv) @ delta).normalized(ring))
        up = cur_diff(d + 1)
        set_diff(d + 1, up.submatrix(cols, range(up.cols)))
        down = cur_diff(d - 1)
        set_diff(d - 1, down.submatrix(range(down.rows), rows))
        # elementary contraction maps for the cancelled pair
        i2_d = [[0] * (len(cols)) for _ in range(M.cols)]
        for new_j, j in enumerate(cols):
            i2_d[j][new_j] = 1
        for new_j, j in enumerate(cols):
            i2_d[b][new_j] = ring.normalize(-phi_inv * delta[0, new_j])
        i2_d = Matrix.from_rows(i2_d) if M.cols else Matrix.zeros(0, 0)
        p2_d = Matrix.from_rows([[1 if j == c else 0 for j in range(M.cols)] for c in cols]) \
            if cols else Matrix.zeros(0, M.cols)
        i2_dm1 = Matrix.from_rows([[1 if r == c else 0 for c in rows] for r in range(M.rows)]) \
            if rows else Matrix.zeros(M.rows, 0)
        p2_rows = []
        for new_i, i in enumerate(rows):
            row = [0] * M.rows
            row[i] = 1
            row[y] = ring.normalize(-phi_inv * gamma[new_i, 0])
            p2_rows.append(row)
        p2_dm1 = Matrix.from_rows(p2_rows) if rows else Matrix.zeros(0, M.rows)
        h2 = [[0] * M.rows for _ in range(M.cols)]
        h2[b][y] = phi_inv
        h2 = Matrix.from_rows(h2) if M.cols and M.rows else Matrix.zeros(M.cols, M.rows)
        # compose: h += i∘h2∘p at degree d-1, then update i and p
        homot[d - 1] = (homot[d - 1] + inc[d] @ h2 @ proj[d - 1]).normalized(ring)
        inc[d] = (inc[d] @ i2_d).normalized(ring)
        proj[d] = (p2_d @ proj[d]).normalized(ring)
        inc[d - 1] = (inc[d - 1] @ i2_dm1).normalized(ring)
        proj[d - 1] = (p2_dm1 @ proj[d - 1]).normalized(ring)
        ranks[d] -= 1
        ranks[d - 1] -= 1

    for d in range(lo + 1, hi + 1):
        M = cur_diff(d)
        if M.is_zero_mod(ring):
            set_diff(d, Matrix.zeros(M.rows, M.cols))
            continue
        if ring.is_field:
            U, Uinv, Dg, V, Vinv = _field_diagonalize(M, ring)
        else:
            U, Uinv, Dg, V, Vinv = _smith_with_inverses(M)
        set_diff(d, Dg)
        apply_iso(d, V, Vinv, Uinv, U)
        for idx in reversed(range(min(Dg.rows, Dg.cols))):
            if ring.is_unit(cur_diff(d)[idx, idx]):
                cancel(d, idx, idx)
        leftover = cur_diff(d)
        if not leftover.is_zero_mod(ring):
            bad = [leftover[i, i] for i in range(min(leftover.rows, leftover.cols))
                   if leftover[i, i] != 0]
            raise TorsionObstruction(
                f"invariant factors {bad} at degree {d} obstruct an integral splitting")

    small = FreeChainComplex.from_dicts(
        {d: ranks[d] for d in range(lo, hi + 1)},
        {d: Matrix.zeros(ranks[d - 1], ranks[d]) for d in range(lo + 1, hi + 1)},
    )
    return Contraction(
        ambient=C,
        small=small,
        include=tuple(inc[d] for d in range(lo, hi + 1)),
        project=tuple(proj[d] for d in range(lo, hi + 1)),
        homotopy=tuple(homot[d] for d in range(lo, hi + 1)),
    )


def _assemble_blocks(entries: Mapping[tuple[int, int], Matrix],
                     row_offsets: Sequence[int], col_offsets: Sequence[int],
                     rtot: int, ctot: int) -> Matrix:
    grid = [[0] * ctot for _ in range(rtot)]
    for (bi, bj), m in entries.items():
        r0, c0 = row_offsets[bi], col_offsets[bj]
        for i in range(m.rows):
            row = m.data[i]
            for j in range(m.cols):
                if row[j]:
                    grid[r0 + i][c0 + j] = row[j]
    return Matrix.from_rows(grid) if rtot else Matrix.zeros(0, ctot)


def perturb_transfer(
    blocks: Sequence[Contraction],
    delta: Mapping[tuple[int, int], Mapping[int, Matrix]],
    level_bound: int,
    ring: CoefficientRing = ZZ,
) -> FreeChainComplex:
    """Transfer a perturbed differential onto the direct sum of small parts.

    ``delta[(tgt, src)][d]`` maps the ambient of block ``src`` in degree d
    to the ambient of block ``tgt`` in degree d-1, and must strictly lower
    a finite filtration so that the series p∘delta∘(h∘delta)^j∘i stops
    after at most ``level_bound`` terms; otherwise NonNilpotent is raised.
    """
    if not blocks:
        return FreeChainComplex.empty()
    lo = min(b.ambient.lo for b in blocks)
    hi = max(b.ambient.hi for b in blocks)

    def offsets(rank_fn):
        offs: dict[int, list[int]] = {}
        totals: dict[int, int] = {}
        for d in range(lo, hi + 1):
            acc = [0]
            for b in blocks:
                acc.append(acc[-1] + rank_fn(b, d))
            offs[d] = acc[:-1]
            totals[d] = acc[-1]
        return offs, totals

    amb_off, amb_tot = offsets(lambda b, d: b.ambient.rank(d))
    sm_off, sm_tot = offsets(lambda b, d: b.small.rank(d))

    def block_diag(mats: Sequence[Matrix], row_off, col_off, rtot, ctot) -> Matrix:
        return _assemble_blocks({(k, k): m for k, m in enumerate(mats)},
                                row_off, col_off, rtot, ctot)

    inc_g = {d: block_diag([b.include_at(d) for b in blocks],
                           amb_off[d], sm_off[d], amb_tot[d], sm_tot[d])
             for d in range(lo, hi + 1)}
    proj_g = {d: block_diag([b.project_at(d) for b in blocks],
                            sm_off[d], amb_off[d], sm_tot[d], amb_tot[d])
              for d in range(lo, hi + 1)}
    hom_g = {d: block_diag([b.homotopy_at(d) for b in blocks],
                           amb_off[d + 1], amb_off[d], amb_tot[d + 1], amb_tot[d])
             for d in range(lo, hi)}
    delta_g = {}
    for d in range(lo + 1, hi + 1):
        entries = {}
        for (ti, si), per_degree in delta.items():
            m = per_degree.get(d)
            if m is not None and not m.is_zero():
                entries[(ti, si)] = m
        delta_g[d] = _assemble_blocks(entries, amb_off[d - 1], amb_off[d],
                                      amb_tot[d - 1], amb_tot[d])

    diffs: dict[int, Matrix] = {}
    for d in range(lo + 1, hi + 1):
        acc = Matrix.zeros(sm_tot[d - 1], sm_tot[d])
        x = inc_g[d]
        j = 0
        while not x.is_zero_mod(ring):
            if j >= level_bound:
                raise NonNilpotent(f"perturbation series still nonzero after {j} terms")
            y = delta_g[d] @ x
            acc = acc + proj_g[d - 1] @ y
            x = (hom_g[d - 1] @ y) if d - 1 in hom_g else Matrix.zeros(amb_tot[d], sm_tot[d])
            x = x.normalized(ring)
            j += 1
        diffs[d] = acc.normalized(ring)

    out = FreeChainComplex.from_dicts({d: sm_tot[d] for d in range(lo, hi + 1)}, diffs)
    for d in range(lo + 2, hi + 1):
        if not (out.diff(d - 1) @ out.diff(d)).is_zero_mod(ring):
            raise ValueError("transferred differential does not square to zero; "
                             "delta violates the perturbation preconditions")
    return out
