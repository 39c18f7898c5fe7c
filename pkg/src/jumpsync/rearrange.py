"""
Optimal rearrangement of jump-event matrices.

Mixed-integer formulation
-------------------------
For an ``h x q`` jump-event matrix ``J = (g_il)`` choose binary
``p_lii'`` (``l = 1..q``, ``i, i' = 1..h``) and reals ``L <= U`` to

    minimize    U - L
    subject to  L <= sum_l sum_i' p_lii' g_i'l <= U          for every row i
                sum_i' p_lii' = 1,  sum_i p_lii' = 1          (each P_l a permutation)
                sum_lii' p_lii' = h q
                p_qii = 1                                     (target column fixed)
                sum_ii' p_lii' d_lii' <= c_l                  for l < q

where ``d_lii' = |i - i'|`` if ``i'`` is the original row of the jump in
column ``l`` and ``i < i'`` (a backward move), and ``d_lii' = +inf`` for
forward moves of the jump (excluded), 0 otherwise.

Since every jump column carries exactly one non-zero entry, the row-sums
depend on a column's permutation only through the new row of that entry;
moving the zeros around changes nothing. Each feasible ``P_l`` therefore
collapses to one integer backward shift ``s_l in [0, c_l]``, and the program
is solved exactly by a depth-first branch-and-bound over shift vectors.
Row-sums are accumulated in exact integer arithmetic (floats are dyadic
rationals, so scaling by a common power of two is lossless), which makes
optimality and tie-breaking reproducible to the last bit.

Among range-optimal rearrangements the solver prefers more jumps landing on
an ETF jump row, then a smaller total shift, then the lexicographically
smallest shift vector.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .eventmatrix import JumpEventMatrix
from .errors import InfeasibleConstraintError

__all__ = [
    "RlpConstraints",
    "RearrangementSolution",
    "TracePoint",
    "TraceResult",
    "OracleResult",
    "RAResult",
    "permutation_vector",
    "permutation_matrix",
    "co_permutation",
    "validate_co_permutation",
    "distance_matrix",
    "jump_distance",
    "apply",
    "apply_shifts",
    "spread_range",
    "shift_bounds",
    "solve_rlp",
    "trace",
    "brute_force_oracle",
    "vanilla_ra",
    "is_oppositely_ordered",
]


@dataclass(frozen=True)
class RlpConstraints:
    """Economic restrictions on the rearrangement.

    Attributes
    ----------
    freeze_matched : bool
        Jumps already on an ETF jump row may not move.
    no_earlier_than_etf : bool
        No jump may be moved before the first ETF jump of the window.
    budgets : sequence of int, optional
        Per-column maximum backward shift, overriding the common budget.
    fixed_shifts : mapping column -> shift, optional
        Pins the shift of individual columns.
    """

    freeze_matched: bool = False
    no_earlier_than_etf: bool = False
    budgets: Sequence[int] | None = None
    fixed_shifts: Mapping[int, int] | None = None


EMPIRICAL_CONSTRAINTS = RlpConstraints(freeze_matched=True, no_earlier_than_etf=True)


def shift_bounds(matrix: JumpEventMatrix, budget, constraints: RlpConstraints | None = None):
    """Feasible backward shift interval ``[lo_l, hi_l]`` of every jump column."""
    constraints = constraints or RlpConstraints()
    n = matrix.n_jumps
    if constraints.budgets is not None:
        budgets = np.asarray(constraints.budgets, dtype=np.int64)
        if budgets.shape != (n,):
            raise ValueError("budgets must have one entry per jump column")
    else:
        budgets = np.full(n, int(budget), dtype=np.int64)
    if np.any(budgets < 0):
        raise ValueError("budgets must be non-negative")

    rows = matrix.jump_rows
    hi = np.minimum(budgets, rows)
    etf_rows = set(matrix.etf_rows)
    if constraints.no_earlier_than_etf and etf_rows:
        hi = np.minimum(hi, np.maximum(0, rows - min(etf_rows)))
    if constraints.freeze_matched:
        hi = np.where([r in etf_rows for r in rows], 0, hi)
    lo = np.zeros(n, dtype=np.int64)
    hi = hi.astype(np.int64)

    for col, shift in (constraints.fixed_shifts or {}).items():
        if not 0 <= col < n:
            raise InfeasibleConstraintError(f"fixed shift for unknown column {col}")
        if not lo[col] <= shift <= hi[col]:
            raise InfeasibleConstraintError(
                f"column {col} pinned to shift {shift}, feasible range is [{lo[col]}, {hi[col]}]")
        lo[col] = hi[col] = shift
    return lo, hi


def spread_range(values) -> float:
    """Range (max minus min) of a vector of row-sums."""
    values = np.asarray(values, dtype=float)
    return float(values.max() - values.min()) if values.size else 0.0


# -- permutation matrices ---------------------------------------------------

def permutation_vector(h: int, old_row: int, new_row: int) -> np.ndarray:
    """Permutation moving the entry at ``old_row`` to ``new_row``.

    ``pi[i]`` is the original row of the entry that ends up in row ``i``;
    the entries in between are rotated by one position to fill the gap.
    """
    if not (0 <= old_row < h and 0 <= new_row < h):
        raise ValueError("rows must lie within the window")
    pi = np.arange(h)
    if new_row < old_row:
        pi[new_row] = old_row
        pi[new_row + 1:old_row + 1] = np.arange(new_row, old_row)
    elif new_row > old_row:
        pi[new_row] = old_row
        pi[old_row:new_row] = np.arange(old_row + 1, new_row + 1)
    return pi


def permutation_matrix(pi) -> np.ndarray:
    """Row representation: ``P[i, pi[i]] = 1`` so that ``(P x)[i] = x[pi[i]]``."""
    pi = np.asarray(pi)
    out = np.zeros((len(pi), len(pi)), dtype=np.int64)
    out[np.arange(len(pi)), pi] = 1
    return out


def co_permutation(matrix: JumpEventMatrix, shifts) -> list[np.ndarray]:
    """The ``q`` permutation matrices realizing backward ``shifts``."""
    shifts = np.asarray(shifts, dtype=np.int64)
    h = matrix.h
    mats = [permutation_matrix(permutation_vector(h, r, r - s))
            for r, s in zip(matrix.jump_rows, shifts)]
    mats.append(np.eye(h, dtype=np.int64))
    return mats


def distance_matrix(h: int) -> np.ndarray:
    idx = np.arange(h)
    return np.abs(idx[:, None] - idx[None, :])


def _masked_distance(h: int, jump_row: int, backward_only: bool) -> np.ndarray:
    d = np.zeros((h, h), dtype=np.int64)
    d[:, jump_row] = distance_matrix(h)[:, jump_row]
    if backward_only:
        d[jump_row:, jump_row] = 0
    return d


def jump_distance(perm: np.ndarray, jump_row: int, backward_only: bool = False) -> int:
    """Distance travelled by the entry originally at ``jump_row``.

    Computed as the inner product of the row-vectorized permutation matrix
    with the distance matrix whose columns other than ``jump_row`` are zeroed.
    With ``backward_only`` only the upper-triangular part counts.
    """
    perm = np.asarray(perm)
    h = perm.shape[0]
    if not 0 <= jump_row < h:
        raise ValueError("jump_row outside the permutation matrix")
    d = _masked_distance(h, jump_row, backward_only)
    return int(perm.reshape(-1) @ d.reshape(-1))


def _check_permutation_matrix(perm, h: int, label: str) -> None:
    perm = np.asarray(perm)
    if perm.shape != (h, h):
        raise ValueError(f"{label}: expected shape {(h, h)}, got {perm.shape}")
    if not np.all((perm == 0) | (perm == 1)):
        raise ValueError(f"{label}: entries must be 0 or 1")
    if not np.all(perm.sum(axis=1) == 1):
        raise ValueError(f"{label}: every row must contain exactly one 1")
    if not np.all(perm.sum(axis=0) == 1):
        raise ValueError(f"{label}: every column must contain exactly one 1")


def validate_co_permutation(perms, matrix: JumpEventMatrix | None = None,
                            budgets=None, backward_only: bool = True) -> None:
    """Raise ``ValueError`` unless ``perms`` is a valid co-permutation.

    Checks that every block is a permutation matrix, that the total number
    of ones is ``h q``, that the last block is the identity and, when the
    matrix is given, that every jump moves backward within its budget.
    """
    if not perms:
        raise ValueError("empty co-permutation")
    h = np.asarray(perms[0]).shape[0]
    for l, perm in enumerate(perms):
        _check_permutation_matrix(perm, h, f"block {l}")
    if sum(int(np.asarray(p).sum()) for p in perms) != h * len(perms):
        raise ValueError("co-permutation must contain exactly h*q ones")
    if not np.array_equal(np.asarray(perms[-1]), np.eye(h, dtype=np.asarray(perms[-1]).dtype)):
        raise ValueError("the target block must be the identity")
    if matrix is None:
        return
    if len(perms) != matrix.q or h != matrix.h:
        raise ValueError("co-permutation does not match the matrix dimensions")
    if budgets is not None:
        budgets = np.broadcast_to(np.asarray(budgets), (matrix.n_jumps,))
    for l, (perm, row) in enumerate(zip(perms[:-1], matrix.jump_rows)):
        perm = np.asarray(perm)
        new_row = int(np.flatnonzero(perm[:, row])[0])
        if backward_only and new_row > row:
            raise ValueError(f"column {l}: jump moved forward in time")
        if budgets is not None and jump_distance(perm, row) > budgets[l]:
            raise ValueError(f"column {l}: move exceeds the budget {budgets[l]}")


def apply(matrix: JumpEventMatrix, perms) -> tuple[np.ndarray, np.ndarray]:
    """Rearranged dense matrix ``[P_1 g_1, ..., P_q g_q]`` and its row-sums."""
    validate_co_permutation(perms)
    dense = matrix.dense()
    if len(perms) != dense.shape[1] or np.asarray(perms[0]).shape[0] != dense.shape[0]:
        raise ValueError("co-permutation does not match the matrix dimensions")
    out = np.column_stack([np.asarray(p) @ dense[:, l] for l, p in enumerate(perms)])
    return out, out.sum(axis=1)


def apply_shifts(matrix: JumpEventMatrix, shifts) -> np.ndarray:
    """Row-sums after moving each jump ``shifts[l]`` rows back."""
    shifts = np.asarray(shifts, dtype=np.int64)
    return matrix.row_sums(matrix.jump_rows - shifts)


# -- exact branch-and-bound -------------------------------------------------

def _scaled_integers(values) -> tuple[list[int], int]:
    ratios = [float(v).as_integer_ratio() for v in values]
    denom = max((d for _, d in ratios), default=1)
    return [n * (denom // d) for n, d in ratios], denom


@dataclass
class RearrangementSolution:
    """Optimal rearrangement of one jump-event matrix.

    ``shifts[l]`` is the number of rows jump ``l`` moved back in time;
    ``lower`` and ``upper`` are the smallest and largest rearranged row-sums
    and ``range`` their difference. ``range_exact`` holds the same value as
    an exact fraction. ``optimal`` is False when a time limit stopped the
    search early.
    """

    matrix: JumpEventMatrix
    shifts: np.ndarray
    row_sums: np.ndarray
    range: float
    lower: float
    upper: float
    matched_count: int
    total_distance: int
    range_exact: Fraction
    range_before: float
    optimal: bool = True
    nodes: int = 0
    shift_lo: np.ndarray = field(default=None, repr=False)
    shift_hi: np.ndarray = field(default=None, repr=False)

    @property
    def new_rows(self) -> np.ndarray:
        return self.matrix.jump_rows - self.shifts

    @property
    def moved(self) -> bool:
        return bool(np.any(self.shifts))

    def co_permutation(self) -> list[np.ndarray]:
        return co_permutation(self.matrix, self.shifts)

    def rearranged_dense(self) -> np.ndarray:
        out = np.zeros((self.matrix.h, self.matrix.q))
        out[self.new_rows, np.arange(self.matrix.n_jumps)] = self.matrix.jump_values
        out[:, -1] = self.matrix.target
        return out

    def to_dict(self) -> dict:
        return {
            "start": self.matrix.start,
            "h": self.matrix.h,
            "q": self.matrix.q,
            "shifts": [int(s) for s in self.shifts],
            "new_rows": [int(r) for r in self.new_rows],
            "assets": [str(a) for a in self.matrix.jump_assets],
            "range_before": float(self.range_before),
            "range_after": float(self.range),
            "lower": float(self.lower),
            "upper": float(self.upper),
            "matched_before": _matched(self.matrix.jump_rows, self.matrix.etf_rows),
            "matched_after": self.matched_count,
            "total_distance": int(self.total_distance),
            "optimal": self.optimal,
        }


def _matched(rows, etf_rows) -> int:
    etf = set(etf_rows)
    return sum(1 for r in rows if int(r) in etf)


class _Search:
    def __init__(self, matrix: JumpEventMatrix, lo, hi, time_limit):
        self.h = matrix.h
        ints, self.denom = _scaled_integers(list(matrix.target) + list(matrix.jump_values))
        self.target = ints[:self.h]
        self.values = ints[self.h:]
        self.rows = [int(r) for r in matrix.jump_rows]
        self.lo = [int(v) for v in lo]
        self.hi = [int(v) for v in hi]
        self.etf = set(matrix.etf_rows)
        self.deadline = None if time_limit is None else time.perf_counter() + time_limit
        self.nodes = 0
        self.timed_out = False

        n = len(self.rows)
        self.free = [l for l in range(n) if self.hi[l] > self.lo[l]]
        base = list(self.target)
        self.base_matched = 0
        self.base_distance = 0
        for l in range(n):
            if self.hi[l] == self.lo[l]:
                new_row = self.rows[l] - self.lo[l]
                base[new_row] += self.values[l]
                self.base_matched += new_row in self.etf
                self.base_distance += self.lo[l]
        self.base = base

        # suffix tables over the free columns: extreme contributions per row
        k = len(self.free)
        self.neg = [[0] * self.h for _ in range(k + 1)]
        self.pos = [[0] * self.h for _ in range(k + 1)]
        self.reach_etf = [0] * (k + 1)
        self.min_dist = [0] * (k + 1)
        for depth in range(k - 1, -1, -1):
            l = self.free[depth]
            neg, pos = list(self.neg[depth + 1]), list(self.pos[depth + 1])
            v = self.values[l]
            reach = range(self.rows[l] - self.hi[l], self.rows[l] - self.lo[l] + 1)
            for i in reach:
                if v < 0:
                    neg[i] += v
                else:
                    pos[i] += v
            self.neg[depth], self.pos[depth] = neg, pos
            self.reach_etf[depth] = self.reach_etf[depth + 1] + any(i in self.etf for i in reach)
            self.min_dist[depth] = self.min_dist[depth + 1] + self.lo[l]

        self.best_key = None
        self.best_shifts = None

    def bound(self, sums, depth) -> int:
        neg, pos = self.neg[depth], self.pos[depth]
        return (max(s + a for s, a in zip(sums, neg))
                - min(s + b for s, b in zip(sums, pos)))

    def full_shifts(self, free_shifts) -> tuple[int, ...]:
        out = list(self.lo)
        for l, s in zip(self.free, free_shifts):
            out[l] = s
        return tuple(out)

    def evaluate(self, free_shifts):
        sums = list(self.base)
        matched, dist = self.base_matched, self.base_distance
        for l, s in zip(self.free, free_shifts):
            new_row = self.rows[l] - s
            sums[new_row] += self.values[l]
            matched += new_row in self.etf
            dist += s
        return (max(sums) - min(sums), -matched, dist), sums

    def offer(self, free_shifts) -> None:
        key, _ = self.evaluate(free_shifts)
        shifts = self.full_shifts(free_shifts)
        if self.best_key is None or (key, shifts) < (self.best_key, self.best_shifts):
            self.best_key, self.best_shifts = key, shifts

    def heuristic(self) -> None:
        k = len(self.free)
        self.offer([self.lo[l] for l in self.free])
        if not k:
            return
        toward_etf = []
        first_etf = min(self.etf) if self.etf else None
        for l in self.free:
            if first_etf is None:
                toward_etf.append(self.lo[l])
            else:
                want = self.rows[l] - first_etf
                toward_etf.append(min(max(want, self.lo[l]), self.hi[l]))
        self.offer(toward_etf)
        for start in ([self.lo[l] for l in self.free], toward_etf):
            current = list(start)
            for _ in range(25):
                changed = False
                for j, l in enumerate(self.free):
                    best = None
                    for s in range(self.lo[l], self.hi[l] + 1):
                        trial = current[:j] + [s] + current[j + 1:]
                        key, _ = self.evaluate(trial)
                        cand = (key, self.full_shifts(trial))
                        if best is None or cand < best[0]:
                            best = (cand, s)
                    if best[1] != current[j]:
                        current[j] = best[1]
                        changed = True
                if not changed:
                    break
            self.offer(current)

    def prunable(self, lb, depth, matched, dist, prefix) -> bool:
        best_range, best_neg_matched, best_dist = self.best_key
        if lb > best_range:
            return True
        if lb < best_range:
            return False
        secondary = (-(matched + self.reach_etf[depth]), dist + self.min_dist[depth])
        if secondary != (best_neg_matched, best_dist):
            return secondary > (best_neg_matched, best_dist)
        inc_prefix = tuple(self.best_shifts[l] for l in self.free[:depth])
        return tuple(prefix) > inc_prefix

    def run(self) -> None:
        self.heuristic()
        self._dfs(0, list(self.base), self.base_matched, self.base_distance, [])

    def _dfs(self, depth, sums, matched, dist, prefix) -> None:
        self.nodes += 1
        if self.deadline is not None and self.nodes % 512 == 0 and time.perf_counter() > self.deadline:
            self.timed_out = True
        if self.timed_out:
            return
        if depth == len(self.free):
            self.offer(prefix)
            return
        l = self.free[depth]
        v, row = self.values[l], self.rows[l]
        children = []
        for s in range(self.lo[l], self.hi[l] + 1):
            new_row = row - s
            sums[new_row] += v
            lb = self.bound(sums, depth + 1)
            sums[new_row] -= v
            children.append((lb, s))
        children.sort()
        for lb, s in children:
            new_row = row - s
            m = matched + (new_row in self.etf)
            d = dist + s
            prefix.append(s)
            if not self.prunable(lb, depth + 1, m, d, prefix):
                sums[new_row] += v
                self._dfs(depth + 1, sums, m, d, prefix)
                sums[new_row] -= v
            prefix.pop()
            if self.timed_out:
                return


def solve_rlp(matrix: JumpEventMatrix, budget=None, constraints: RlpConstraints | None = None,
              time_limit: float | None = None) -> RearrangementSolution:
    """Minimum-range rearrangement of the jumps, each moved back at most ``budget`` rows.

    Parameters
    ----------
    matrix : JumpEventMatrix
    budget : int, optional
        Common maximum backward shift; defaults to ``h - 1``. Ignored for
        columns covered by ``constraints.budgets``.
    constraints : RlpConstraints, optional
    time_limit : float, optional
        Seconds after which the search stops and returns the incumbent with
        ``optimal=False``.

    Raises
    ------
    InfeasibleConstraintError
        If pinned shifts contradict the other constraints.
    """
    if budget is None:
        budget = max(matrix.h - 1, 0)
    lo, hi = shift_bounds(matrix, budget, constraints)
    search = _Search(matrix, lo, hi, time_limit)
    search.run()

    shifts = np.asarray(search.best_shifts, dtype=np.int64)
    key, sums = search.evaluate([shifts[l] for l in search.free])
    denom = search.denom
    row_sums = np.array([float(Fraction(s, denom)) for s in sums])
    observed = matrix.row_sums()
    return RearrangementSolution(
        matrix=matrix,
        shifts=shifts,
        row_sums=row_sums,
        range=float(Fraction(key[0], denom)),
        lower=float(Fraction(min(sums), denom)),
        upper=float(Fraction(max(sums), denom)),
        matched_count=-key[1],
        total_distance=key[2],
        range_exact=Fraction(key[0], denom),
        range_before=spread_range(observed),
        optimal=not search.timed_out,
        nodes=search.nodes,
        shift_lo=lo,
        shift_hi=hi,
    )


@dataclass
class TracePoint:
    budget: int
    range: float
    matched: int
    shifts: np.ndarray
    solution: RearrangementSolution = field(repr=False)


@dataclass
class TraceResult:
    points: list[TracePoint]
    best_index: int

    @property
    def best(self) -> TracePoint:
        return self.points[self.best_index]

    def to_rows(self) -> list[dict]:
        return [{"c": p.budget, "range": p.range, "matched": p.matched} for p in self.points]


def trace(matrix: JumpEventMatrix, c_max: int, constraints: RlpConstraints | None = None,
          time_limit: float | None = None) -> TraceResult:
    """Solve the program for every budget ``c = 0..c_max``.

    The preferred budget has the smallest range and, among equal ranges,
    the largest number of matched jumps (then the smallest budget).
    """
    if c_max < 0:
        raise ValueError("c_max must be non-negative")
    points = []
    for c in range(c_max + 1):
        sol = solve_rlp(matrix, c, constraints, time_limit)
        points.append(TracePoint(c, sol.range, sol.matched_count, sol.shifts, sol))
    best = min(range(len(points)),
               key=lambda i: (points[i].solution.range_exact, -points[i].matched, i))
    return TraceResult(points, best)


# -- brute-force oracle -----------------------------------------------------

@dataclass
class OracleResult:
    range: float
    range_exact: Fraction
    shifts: tuple[int, ...]
    matched_count: int
    total_distance: int
    n_evaluated: int


def brute_force_oracle(matrix: JumpEventMatrix, budget: int,
                       constraints: RlpConstraints | None = None,
                       limit: int = 10 ** 7) -> OracleResult:
    """Exhaustive search over all feasible backward shift vectors.

    Uses exact rational arithmetic and the same preference order as
    :func:`solve_rlp`. Refuses instances with more than ``limit``
    candidate vectors.
    """
    constraints = constraints or RlpConstraints()
    rows = [int(r) for r in matrix.jump_rows]
    etf = set(int(r) for r in matrix.etf_rows)
    per_col = (list(constraints.budgets) if constraints.budgets is not None
               else [budget] * len(rows))
    choices = []
    for l, (row, b) in enumerate(zip(rows, per_col)):
        if b < 0:
            raise ValueError("budgets must be non-negative")
        allowed = [s for s in range(0, b + 1) if row - s >= 0]
        if constraints.no_earlier_than_etf and etf:
            allowed = [s for s in allowed if s == 0 or row - s >= min(etf)]
        if constraints.freeze_matched and row in etf:
            allowed = [0]
        pinned = (constraints.fixed_shifts or {}).get(l)
        if pinned is not None:
            if pinned not in allowed:
                raise InfeasibleConstraintError(f"column {l} cannot take shift {pinned}")
            allowed = [pinned]
        choices.append(allowed)
    total = math.prod(len(c) for c in choices)
    if total > limit:
        raise ValueError(f"search space of {total} candidates exceeds the oracle limit {limit}")

    target = [Fraction(t) for t in matrix.target]
    values = [Fraction(v) for v in matrix.jump_values]
    best = None
    for shifts in itertools.product(*choices):
        sums = list(target)
        matched = 0
        for row, s, v in zip(rows, shifts, values):
            sums[row - s] += v
            matched += (row - s) in etf
        key = (max(sums) - min(sums), -matched, sum(shifts), shifts)
        if best is None or key < best:
            best = key
    return OracleResult(float(best[0]), best[0], tuple(best[3]), -best[1], best[2], total)


# -- vanilla rearrangement algorithm ----------------------------------------

@dataclass
class RAResult:
    """Outcome of the vanilla rearrangement algorithm.

    ``variance_history`` has the row-sum variance of the starting matrix
    followed by its value after every column update.
    """

    matrix: np.ndarray
    start: np.ndarray
    row_sums: np.ndarray
    variance_history: list[float]
    range_history: list[float]
    n_iterations: int
    converged: bool

    @property
    def range(self) -> float:
        return spread_range(self.row_sums)


def is_oppositely_ordered(column, others) -> bool:
    """True if no pair of rows is ordered the same way in both vectors."""
    x = np.asarray(column, dtype=float)
    s = np.asarray(others, dtype=float)
    dx = x[:, None] - x[None, :]
    ds = s[:, None] - s[None, :]
    return bool(np.all(dx * ds <= 0))


def vanilla_ra(matrix, rng_seed=None, max_iters: int = 100, shuffle: bool = True,
               start: np.ndarray | None = None) -> RAResult:
    """Rearrangement algorithm with a fixed last (target) column.

    Each pass visits the jump columns in order and sorts each one
    oppositely to the sum of all other columns; a column that is already
    oppositely ordered is left alone. Stops after a pass without changes or
    after ``max_iters`` passes. Jumps may end up anywhere in the window:
    there are no backward-only or budget restrictions.

    Parameters
    ----------
    matrix : JumpEventMatrix or array of shape (h, q)
    rng_seed : int, optional
        Seed of the initial random shuffle of the jump columns.
    shuffle : bool
        Shuffle the jump columns before iterating.
    start : array of shape (h, q), optional
        Explicit starting matrix; overrides ``matrix`` and ``shuffle``.
    """
    dense = matrix.dense() if isinstance(matrix, JumpEventMatrix) else np.asarray(matrix, dtype=float)
    if start is not None:
        current = np.array(start, dtype=float)
        if current.shape != dense.shape:
            raise ValueError("start must have the shape of the matrix")
    else:
        current = dense.copy()
        if shuffle:
            rng = np.random.default_rng(rng_seed)
            for l in range(current.shape[1] - 1):
                current[:, l] = rng.permutation(current[:, l])
    initial = current.copy()
    h, q = current.shape

    variances = [float(np.var(current.sum(axis=1)))]
    ranges = [spread_range(current.sum(axis=1))]
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        changed = False
        for l in range(q - 1):
            others = np.delete(current, l, axis=1).sum(axis=1)
            if is_oppositely_ordered(current[:, l], others):
                continue
            order = np.argsort(others, kind="stable")
            column = np.empty(h)
            column[order] = np.sort(current[:, l])[::-1]
            current[:, l] = column
            changed = True
            sums = current.sum(axis=1)
            variances.append(float(np.var(sums)))
            ranges.append(spread_range(sums))
        if not changed:
            converged = True
            break
    return RAResult(current, initial, current.sum(axis=1), variances, ranges, iterations, converged)
