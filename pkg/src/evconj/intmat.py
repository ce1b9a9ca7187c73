"""Exact nonnegative integer matrices and (balanced) shift equivalence.

Everything is plain Python ``int`` arithmetic; no floating point is used
anywhere, so determinants and power relations are exact.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import BoundExceeded, MatrixError

DEFAULT_BUDGET = 2_000_000


class NonNegMatrix:
    """Immutable rectangular matrix of nonnegative Python integers."""

    __slots__ = ("_rows", "_nrows", "_ncols", "_hash")

    def __init__(self, entries: Iterable[Iterable[int]], cols: int | None = None):
        rows = tuple(tuple(r) for r in entries)
        ncols = len(rows[0]) if rows else (cols or 0)
        if cols is not None and rows and ncols != cols:
            raise MatrixError(f"declared {cols} columns but rows have {ncols}")
        for r in rows:
            if len(r) != ncols:
                raise MatrixError("ragged matrix rows")
            for x in r:
                if isinstance(x, bool) or not isinstance(x, int):
                    raise MatrixError(f"matrix entries must be integers, got {x!r}")
                if x < 0:
                    raise MatrixError(f"negative matrix entry {x}")
        self._rows = rows
        self._nrows = len(rows)
        self._ncols = ncols
        self._hash = hash(rows)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> NonNegMatrix:
        return cls([[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def identity(cls, n: int) -> NonNegMatrix:
        return cls([[int(i == j) for j in range(n)] for i in range(n)], cols=n)

    @property
    def rows(self) -> int:
        return self._nrows

    @property
    def cols(self) -> int:
        return self._ncols

    @property
    def shape(self) -> tuple[int, int]:
        return self._nrows, self._ncols

    @property
    def entries(self) -> tuple[tuple[int, ...], ...]:
        return self._rows

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._rows[i]

    def col(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._rows)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._rows]

    @property
    def T(self) -> NonNegMatrix:
        return NonNegMatrix(zip(*self._rows), cols=self._nrows) if self._rows else NonNegMatrix.zeros(self._ncols, 0)

    def __matmul__(self, other: NonNegMatrix) -> NonNegMatrix:
        if not isinstance(other, NonNegMatrix):
            return NotImplemented
        if self._ncols != other._nrows:
            raise MatrixError(f"cannot multiply {self._nrows}x{self._ncols} by {other._nrows}x{other._ncols}")
        cols = list(zip(*other._rows)) if other._rows else [()] * other._ncols
        return NonNegMatrix(
            [[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self._rows],
            cols=other._ncols,
        )

    def __pow__(self, k: int) -> NonNegMatrix:
        if self._nrows != self._ncols:
            raise MatrixError("only square matrices have powers")
        if k < 0:
            raise ValueError("negative power")
        result = NonNegMatrix.identity(self._nrows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NonNegMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"NonNegMatrix({self.tolist()})"

    def max_entry(self) -> int:
        return max((x for r in self._rows for x in r), default=0)

    def total(self) -> int:
        return sum(sum(r) for r in self._rows)

    def has_zero_row(self) -> bool:
        return any(not any(r) for r in self._rows)

    def det(self) -> int:
        if self._nrows != self._ncols:
            raise MatrixError("determinant of a non-square matrix")
        return bareiss_det(self._rows)

    def permuted(self, perm: Sequence[int]) -> NonNegMatrix:
        """Simultaneous row/column permutation: new (i, j) is old (perm[i], perm[j])."""
        return NonNegMatrix([[self._rows[a][b] for b in perm] for a in perm], cols=self._ncols)

    def select(self, rows: Sequence[int] | None = None, cols: Sequence[int] | None = None) -> NonNegMatrix:
        ri = range(self._nrows) if rows is None else rows
        ci = range(self._ncols) if cols is None else cols
        return NonNegMatrix([[self._rows[a][b] for b in ci] for a in ri], cols=len(ci))


def as_matrix(M) -> NonNegMatrix:
    return M if isinstance(M, NonNegMatrix) else NonNegMatrix(M)


def bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination; exact for integer input."""
    n = len(rows)
    if n == 0:
        return 1
    M = [list(r) for r in rows]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def residual(lhs: NonNegMatrix, rhs: NonNegMatrix) -> list[list[int]]:
    return [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(lhs.entries, rhs.entries)]


# -- division / amalgamation ------------------------------------------------

def is_division_matrix(M) -> bool:
    M = as_matrix(M)
    if any(x not in (0, 1) for r in M.entries for x in r):
        return False
    if any(sum(M.col(j)) != 1 for j in range(M.cols)):
        return False
    return all(any(r) for r in M.entries)


def is_amalgamation_matrix(M) -> bool:
    return is_division_matrix(as_matrix(M).T)


def division_matrix(parents: Sequence[int], n_parents: int) -> NonNegMatrix:
    """Division matrix sending column j to row ``parents[j]``."""
    rows = [[0] * len(parents) for _ in range(n_parents)]
    for j, p in enumerate(parents):
        rows[p][j] = 1
    return NonNegMatrix(rows, cols=len(parents))


# -- elementary relations ---------------------------------------------------

def _product(name: str, X: NonNegMatrix, Y: NonNegMatrix) -> NonNegMatrix:
    if X.cols != Y.rows:
        raise MatrixError(f"{name}: cannot multiply {X.rows}x{X.cols} by {Y.rows}x{Y.cols}")
    return X @ Y


def verify_elementary(A, R, S, B) -> bool:
    """True iff A = RS and SR = B exactly."""
    A, R, S, B = map(as_matrix, (A, R, S, B))
    rs = _product("R*S", R, S)
    sr = _product("S*R", S, R)
    if rs.shape != A.shape:
        raise MatrixError(f"R*S is {rs.rows}x{rs.cols} but A is {A.rows}x{A.cols}")
    if sr.shape != B.shape:
        raise MatrixError(f"S*R is {sr.rows}x{sr.cols} but B is {B.rows}x{B.cols}")
    return rs == A and sr == B


@dataclass(frozen=True)
class BeeTriple:
    """A balanced elementary equivalence ``(R_A, S, R_B)``."""

    r_a: NonNegMatrix
    s: NonNegMatrix
    r_b: NonNegMatrix

    def reversed(self) -> BeeTriple:
        return BeeTriple(self.r_b, self.s, self.r_a)

    def permuted(self, perm: Sequence[int]) -> BeeTriple:
        """Relabel the outer index; ``perm[i]`` is the old index of new index i."""
        return BeeTriple(
            self.r_a.select(cols=perm),
            self.s.select(rows=perm),
            self.r_b.select(cols=perm),
        )

    def common(self) -> NonNegMatrix:
        return self.r_a @ self.s

    def to_dict(self) -> dict:
        return {"R_A": matrix_to_dict(self.r_a), "S": matrix_to_dict(self.s), "R_B": matrix_to_dict(self.r_b)}

    @classmethod
    def from_dict(cls, d: Mapping) -> BeeTriple:
        return cls(matrix_from_dict(d["R_A"]), matrix_from_dict(d["S"]), matrix_from_dict(d["R_B"]))


def reflexive_triple(A) -> BeeTriple:
    A = as_matrix(A)
    return BeeTriple(A, NonNegMatrix.identity(A.rows), A)


def _check_triple_shapes(A: NonNegMatrix, B: NonNegMatrix, t: BeeTriple) -> None:
    if A.rows != A.cols or B.shape != A.shape:
        raise MatrixError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
    n = A.rows
    m = t.s.cols
    if t.s.rows != n:
        raise MatrixError(f"S must have {n} rows, has {t.s.rows}")
    if t.r_a.shape != (m, n):
        raise MatrixError(f"R_A must be {m}x{n}, is {t.r_a.rows}x{t.r_a.cols}")
    if t.r_b.shape != (m, n):
        raise MatrixError(f"R_B must be {m}x{n}, is {t.r_b.rows}x{t.r_b.cols}")


def verify_balanced_elementary(A, B, t: BeeTriple) -> bool:
    """True iff A = S R_A, B = S R_B and R_A S = R_B S, all exactly."""
    A, B = as_matrix(A), as_matrix(B)
    _check_triple_shapes(A, B, t)
    return t.s @ t.r_a == A and t.s @ t.r_b == B and t.r_a @ t.s == t.r_b @ t.s


def zero_row_free(t: BeeTriple) -> bool:
    """Triples whose S has a zero row force sinks and are unusable for graphs."""
    return not t.s.has_zero_row()


# -- necessary conditions ---------------------------------------------------

@dataclass(frozen=True)
class InvariantReport:
    det_a: int
    det_b: int
    power_relations: tuple[tuple[int, bool, bool], ...]

    @property
    def det_equal(self) -> bool:
        return self.det_a == self.det_b

    @property
    def passed(self) -> bool:
        return self.det_equal and all(a and b for _, a, b in self.power_relations)

    def first_failure(self) -> str | None:
        if not self.det_equal:
            return f"det(A) = {self.det_a} != {self.det_b} = det(B)"
        for n, ok_a, ok_b in self.power_relations:
            if not ok_a:
                return f"A^{n + 1} != B^{n} A" if n > 1 else "A^2 != B A"
            if not ok_b:
                return f"B^{n + 1} != A^{n} B" if n > 1 else "B^2 != A B"
        return None

    def to_dict(self) -> dict:
        return {
            "det_a": self.det_a,
            "det_b": self.det_b,
            "det_equal": self.det_equal,
            "power_relations": [{"n": n, "A": a, "B": b} for n, a, b in self.power_relations],
            "passed": self.passed,
        }


def necessary_invariants(A, B, n_max: int = 3) -> InvariantReport:
    A, B = as_matrix(A), as_matrix(B)
    if A.rows != A.cols or A.shape != B.shape:
        raise MatrixError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rel = []
    An, Bn = A, B
    for n in range(1, n_max + 1):
        rel.append((n, An @ A == Bn @ A, Bn @ B == An @ B))
        An, Bn = An @ A, Bn @ B
    return InvariantReport(A.det(), B.det(), tuple(rel))


# -- bounded search ---------------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    """Search bounds: inner dimension, entry cap and enumeration budget.

    ``m_max`` and ``cap`` default per pair to ``n`` and the largest entry of
    the two matrices (at least 1).  The entry default loses nothing: if S[i,k] exceeds
    every entry of A and B then row k of R_A and R_B is zero, and zeroing
    column k of S keeps all three identities; an oversized R entry forces a
    zero column of S and the matching rows of R_A and R_B can be zeroed.
    """

    m_max: int | None = None
    cap: int | None = None
    budget: int = DEFAULT_BUDGET
    allow_sinks: bool = True

    def resolve(self, A: NonNegMatrix, B: NonNegMatrix) -> tuple[int, int]:
        m = self.m_max if self.m_max is not None else A.rows
        # zero columns of S are never enumerated, so A = B = 0 still needs one nonzero entry
        cap = self.cap if self.cap is not None else max(1, A.max_entry(), B.max_entry())
        return m, cap


def search_space_size(n: int, m_max: int, cap: int) -> int:
    """Number of candidate S matrices (columns as a sorted multiset, no zero column)."""
    from math import comb

    cols = (cap + 1) ** n - 1
    return sum(comb(cols + m - 1, m) for m in range(1, m_max + 1))


def _s_candidates(n: int, m: int, cap: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    # inner index order is immaterial (permute S columns and R rows together),
    # so columns are taken as a non-increasing sequence of nonzero vectors
    vecs = [v for v in product(range(cap, -1, -1), repeat=n) if any(v)]
    for cols in combinations_with_replacement(vecs, m):
        yield cols


def _solve_combination(cols: Sequence[Sequence[int]], target: Sequence[int], cap: int) -> list[tuple[int, ...]]:
    """All x in [0, cap]^m with sum_k x_k * cols[k] == target, lexicographic."""
    m = len(cols)
    n = len(target)
    out: list[tuple[int, ...]] = []
    x = [0] * m

    def rec(k: int, rest: list[int]) -> None:
        if k == m:
            if not any(rest):
                out.append(tuple(x))
            return
        c = cols[k]
        top = cap
        for i in range(n):
            if c[i]:
                top = min(top, rest[i] // c[i])
        for v in range(top + 1):
            x[k] = v
            rec(k + 1, [rest[i] - v * c[i] for i in range(n)] if v else rest)
        x[k] = 0

    rec(0, list(target))
    return out


def _right_factors(S_cols, M: NonNegMatrix, cap: int) -> list[NonNegMatrix] | None:
    """All R with S R = M, enumerated in row-major lexicographic order."""
    per_col = []
    for j in range(M.cols):
        sols = _solve_combination(S_cols, M.col(j), cap)
        if not sols:
            return None
        per_col.append(sols)
    m = len(S_cols)
    found = [NonNegMatrix(list(zip(*choice)), cols=M.cols) if m else None for choice in product(*per_col)]
    found.sort(key=lambda R: R.entries)
    return found


def _left_rows_for(S: NonNegMatrix, C: NonNegMatrix, cap: int) -> list[list[tuple[int, ...]]] | None:
    """Per row p of C, all r in [0,cap]^n with r S = C[p]."""
    S_rows = S.entries
    rows = []
    for p in range(C.rows):
        sols = _solve_combination(S_rows, C.row(p), cap)
        if not sols:
            return None
        rows.append(sols)
    return rows


@dataclass(frozen=True)
class Decision:
    """Outcome of a bounded balanced-elementary search."""

    triple: BeeTriple | None
    m_max: int
    cap: int
    screen: InvariantReport | None
    examined: int
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.triple is not None

    def to_dict(self) -> dict:
        d = {
            "found": self.found,
            "bounds": {"m_max": self.m_max, "cap": self.cap},
            "examined_S": self.examined,
            "reason": self.reason,
        }
        if self.screen is not None:
            d["screen"] = self.screen.to_dict()
        if self.triple is not None:
            d["triple"] = self.triple.to_dict()
        return d


def search_balanced_elementary(A, B, bounds: Bounds | None = None, screen: bool = True) -> Decision:
    """Exhaustive bounded search for a balanced elementary equivalence A -> B.

    Inner dimensions are tried in increasing order; within one, candidate S
    run through column multisets in descending lexicographic order, and for
    each S the first R_A (row-major lexicographic) that admits a matching R_B
    wins.
    """
    A, B = as_matrix(A), as_matrix(B)
    if A.rows != A.cols or A.shape != B.shape:
        raise MatrixError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
    bounds = bounds or Bounds()
    m_max, cap = bounds.resolve(A, B)
    n = A.rows
    size = search_space_size(n, m_max, cap)
    if size > bounds.budget:
        raise BoundExceeded(f"search space too large: {size} candidate S matrices exceed budget {bounds.budget}")
    report = necessary_invariants(A, B, 1) if screen else None
    if report is not None and not report.passed:
        return Decision(None, m_max, cap, report, 0, f"screen failed: {report.first_failure()}")
    examined = 0
    for m in range(1, m_max + 1):
        for S_cols in _s_candidates(n, m, cap):
            examined += 1
            RAs = _right_factors(S_cols, A, cap)
            if not RAs:
                continue
            RBs = _right_factors(S_cols, B, cap)
            if not RBs:
                continue
            S = NonNegMatrix(list(zip(*S_cols)), cols=m)
            if not bounds.allow_sinks and S.has_zero_row():
                continue
            by_common: dict[NonNegMatrix, NonNegMatrix] = {}
            for RB in RBs:
                by_common.setdefault(RB @ S, RB)
            for RA in RAs:
                RB = by_common.get(RA @ S)
                if RB is not None:
                    return Decision(BeeTriple(RA, S, RB), m_max, cap, report, examined, "found")
    return Decision(None, m_max, cap, report, examined, "exhausted")


def decide_balanced_elementary(A, B, bounds: Bounds | None = None) -> BeeTriple | None:
    return search_balanced_elementary(A, B, bounds).triple


def balanced_neighbors(A, bounds: Bounds | None = None) -> Iterator[tuple[NonNegMatrix, BeeTriple]]:
    """Matrices reachable from A by one balanced elementary step within bounds.

    Each neighbor is yielded once, with the first triple found for it.
    """
    A = as_matrix(A)
    bounds = bounds or Bounds()
    m_max, cap = bounds.resolve(A, A)
    n = A.rows
    size = search_space_size(n, m_max, cap)
    if size > bounds.budget:
        raise BoundExceeded(f"search space too large: {size} candidate S matrices exceed budget {bounds.budget}")
    seen: set[NonNegMatrix] = set()
    for m in range(1, m_max + 1):
        for S_cols in _s_candidates(n, m, cap):
            RAs = _right_factors(S_cols, A, cap)
            if not RAs:
                continue
            S = NonNegMatrix(list(zip(*S_cols)), cols=m)
            for RA in RAs:
                rows = _left_rows_for(S, RA @ S, cap)
                if rows is None:
                    continue
                for choice in product(*rows):
                    RB = NonNegMatrix(choice, cols=n)
                    B = S @ RB
                    if B in seen or B.max_entry() > cap:
                        continue
                    if not bounds.allow_sinks and B.has_zero_row():
                        continue
                    seen.add(B)
                    yield B, BeeTriple(RA, S, RB)


# -- certificates -----------------------------------------------------------

@dataclass(frozen=True)
class BsseCertificate:
    matrices: tuple[NonNegMatrix, ...]
    links: tuple[BeeTriple, ...]

    def __post_init__(self):
        if len(self.links) < 1:
            raise MatrixError("a certificate needs at least one link")
        if len(self.matrices) != len(self.links) + 1:
            raise MatrixError("a certificate has one more matrix than links")

    @property
    def source(self) -> NonNegMatrix:
        return self.matrices[0]

    @property
    def target(self) -> NonNegMatrix:
        return self.matrices[-1]

    def __len__(self) -> int:
        return len(self.links)

    def to_dict(self) -> dict:
        return {
            "matrices": [matrix_to_dict(M) for M in self.matrices],
            "links": [t.to_dict() for t in self.links],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> BsseCertificate:
        return cls(
            tuple(matrix_from_dict(M) for M in d["matrices"]),
            tuple(BeeTriple.from_dict(t) for t in d["links"]),
        )


def verify_certificate(c: BsseCertificate) -> bool:
    n = c.matrices[0].rows
    for i, M in enumerate(c.matrices):
        if M.shape != (n, n):
            raise MatrixError(f"link {i}: matrix is {M.rows}x{M.cols}, expected {n}x{n}")
    for i, t in enumerate(c.links):
        try:
            ok = verify_balanced_elementary(c.matrices[i], c.matrices[i + 1], t)
        except MatrixError as exc:
            raise MatrixError(f"link {i + 1}: {exc}") from None
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class BsseSearchResult:
    certificate: BsseCertificate | None
    explored: int
    depth_max: int
    bounds: Bounds = field(default_factory=Bounds)

    def to_dict(self) -> dict:
        d = {"found": self.certificate is not None, "explored_states": self.explored, "depth_max": self.depth_max}
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


class SearchBudgetExceeded(BoundExceeded):
    def __init__(self, explored: int, limit: int):
        self.explored = explored
        super().__init__(f"explored {explored} states, limit {limit}; no certificate yet")


def bsse_search_report(A, B, depth_max: int, bounds: Bounds | None = None, max_states: int = 5000) -> BsseSearchResult:
    """Breadth-first search for the shortest balanced strong shift equivalence.

    At each depth every frontier state is first tested against B directly,
    in discovery order, before the frontier is expanded.
    """
    A, B = as_matrix(A), as_matrix(B)
    if A.rows != A.cols or A.shape != B.shape:
        raise MatrixError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
    bounds = bounds or Bounds()
    m_max, cap = bounds.resolve(A, B)
    fixed = Bounds(m_max, cap, bounds.budget, bounds.allow_sinks)
    if A == B:
        return BsseSearchResult(BsseCertificate((A, A), (reflexive_triple(A),)), 1, depth_max, fixed)
    parent: dict[NonNegMatrix, tuple[NonNegMatrix, BeeTriple] | None] = {A: None}
    frontier = deque([A])
    explored = 0

    def chain(end: NonNegMatrix, last: BeeTriple) -> BsseCertificate:
        mats, links = [B], [last]
        cur = end
        while parent[cur] is not None:
            prev, t = parent[cur]
            mats.append(cur)
            links.append(t)
            cur = prev
        mats.append(cur)
        return BsseCertificate(tuple(reversed(mats)), tuple(reversed(links)))

    for depth in range(1, depth_max + 1):
        for state in frontier:
            explored += 1
            t = search_balanced_elementary(state, B, fixed).triple
            if t is not None:
                return BsseSearchResult(chain(state, t), explored, depth_max, fixed)
        if depth == depth_max:
            break
        nxt = deque()
        for state in frontier:
            for nb, t in balanced_neighbors(state, fixed):
                if nb in parent:
                    continue
                parent[nb] = (state, t)
                nxt.append(nb)
                if len(parent) > max_states:
                    raise SearchBudgetExceeded(len(parent), max_states)
        frontier = nxt
    return BsseSearchResult(None, explored, depth_max, fixed)


def bsse_search(A, B, depth_max: int, bounds: Bounds | None = None, max_states: int = 5000) -> BsseCertificate | None:
    return bsse_search_report(A, B, depth_max, bounds, max_states).certificate


# -- serialization ----------------------------------------------------------

def matrix_to_dict(M: NonNegMatrix) -> dict:
    return {"rows": M.rows, "cols": M.cols, "entries": M.tolist()}


def matrix_from_dict(d) -> NonNegMatrix:
    if isinstance(d, list):
        return NonNegMatrix(d)
    try:
        M = NonNegMatrix(d["entries"], cols=d.get("cols"))
    except (KeyError, TypeError) as exc:
        raise MatrixError(f"malformed matrix document: {exc}") from None
    if "rows" in d and d["rows"] != M.rows:
        raise MatrixError(f"declared {d['rows']} rows but found {M.rows}")
    return M


def matrix_to_json(M: NonNegMatrix) -> str:
    return json.dumps(matrix_to_dict(M))


def certificate_to_json(c: BsseCertificate) -> str:
    return json.dumps(c.to_dict(), indent=2)


def certificate_from_json(text: str) -> BsseCertificate:
    return BsseCertificate.from_dict(json.loads(text))
