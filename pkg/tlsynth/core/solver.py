"""
Built-in MILP solver.

LP relaxations are solved with a dense-tableau, bounded-variable primal
simplex (two phases, Dantzig pricing with a Bland fallback on degenerate
streaks). Binaries are handled by best-first branch-and-bound with
first-in-first-out tie-breaking. With BnbOptions.rounding set, every open
node also tries its rounded binaries as an incumbent.
"""

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .config import BnbOptions
from .errors import SolverError
from .milp import ConstrSense, MilpModel, ObjSense

logger = logging.getLogger('tlsynth.solver')

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
FEAS_TOL = 1e-7
DEFAULT_GAP = 1e-6
DEGENERATE_STREAK = 50


class LpStatus(Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


class SolveStatus(Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    GAP_LIMIT = 'gap_limit'
    NODE_LIMIT = 'node_limit'
    TIME_LIMIT = 'time_limit'


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0


@dataclass
class Solution:
    """Outcome of `solve_milp`; `values` is None when there is no incumbent."""
    status: SolveStatus
    values: Optional[np.ndarray]
    objective: Optional[float]
    bound: float
    gap: float
    nodes: int
    runtime: float

    @property
    def has_incumbent(self) -> bool:
        return self.values is not None


class LpData:
    """Dense arrays of a model, built once and reused across bound changes."""

    def __init__(self, model: MilpModel):
        self.matrix, senses, self.rhs = model.constraint_matrix()
        self.slack_sign = np.array(
            [1.0 if s is ConstrSense.LE else -1.0 if s is ConstrSense.GE else 0.0 for s in senses]
        )
        self.cost = model.objective_vector()
        self.maximize = model.objective_sense is not ObjSense.MINIMIZE
        self.lower, self.upper = model.bounds_arrays()
        self.binaries = np.array(model.binaries, dtype=int)


class _BoundedSimplex:
    """Tableau in canonical form for the current basis.

    Every column j ranges over [0, cap[j]]; nonbasic columns sit at 0 or at
    their cap (`at_upper`). `xb` holds the basic values.
    """

    def __init__(self, table: np.ndarray, rhs: np.ndarray, cap: np.ndarray, basis: np.ndarray):
        self.table = table
        self.xb = rhs.astype(float).copy()
        self.cap = cap.astype(float).copy()
        self.basis = basis.astype(int).copy()
        self.at_upper = np.zeros(table.shape[1], dtype=bool)
        self.blocked = np.zeros(table.shape[1], dtype=bool)
        self.iterations = 0
        self.max_iterations = 50 * (table.shape[0] + table.shape[1]) + 1000

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.cap, 0.0)
        x[self.basis] = self.xb
        return x

    def pivot(self, row: int, col: int) -> None:
        table = self.table
        table[row] /= table[row, col]
        factors = table[:, col].copy()
        factors[row] = 0.0
        table -= np.outer(factors, table[row])

    def enter(self, row: int, col: int, value: float, leaving_upper: bool = False) -> None:
        leaving = self.basis[row]
        self.pivot(row, col)
        self.basis[row] = col
        self.xb[row] = value
        self.at_upper[col] = False
        self.at_upper[leaving] = leaving_upper

    def run(self, cost: np.ndarray) -> LpStatus:
        """Maximize cost @ x from the current basic feasible solution."""
        reduced = cost - cost[self.basis] @ self.table
        streak = 0
        while True:
            movable = ~self.blocked & (self.cap > 0)
            movable[self.basis] = False
            gain = np.where(self.at_upper, -reduced, reduced)
            candidates = np.flatnonzero(movable & (gain > OPT_TOL))
            if candidates.size == 0:
                return LpStatus.OPTIMAL
            if self.iterations >= self.max_iterations:
                logger.warning(f"Simplex stopped at the iteration cap {self.max_iterations}")
                raise SolverError(f"simplex exceeded {self.max_iterations} iterations")
            bland = streak >= DEGENERATE_STREAK
            col = candidates[0] if bland else candidates[np.argmax(gain[candidates])]

            direction = -1.0 if self.at_upper[col] else 1.0
            rate = -direction * self.table[:, col]
            limits = np.full(len(rate), math.inf)
            falling = rate < -PIVOT_TOL
            limits[falling] = self.xb[falling] / -rate[falling]
            basic_cap = self.cap[self.basis]
            rising = (rate > PIVOT_TOL) & np.isfinite(basic_cap)
            limits[rising] = (basic_cap[rising] - self.xb[rising]) / rate[rising]
            limits = np.maximum(limits, 0.0)

            step = self.cap[col]
            row = -1
            if limits.size and limits.min() < step:
                step = limits.min()
                ties = np.flatnonzero(limits <= step + 1e-12)
                if bland:
                    row = ties[np.argmin(self.basis[ties])]
                else:
                    row = ties[np.argmax(np.abs(rate[ties]))]
            if not math.isfinite(step):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            streak = streak + 1 if step <= 1e-12 else 0
            self.xb += rate * step
            if row < 0:
                self.at_upper[col] = not self.at_upper[col]
                continue
            value = self.cap[col] - step if self.at_upper[col] else step
            self.enter(row, col, value, leaving_upper=bool(rate[row] > 0))
            reduced -= reduced[col] * self.table[row]


def _solve(data: LpData, lower: np.ndarray, upper: np.ndarray) -> LpResult:
    if np.any(lower > upper + 1e-12):
        return LpResult(LpStatus.INFEASIBLE)
    fixed = lower == upper
    finite_lower = np.isfinite(lower)
    finite_upper = np.isfinite(upper)
    reflected = ~fixed & ~finite_lower & finite_upper
    offset = np.where(fixed | finite_lower, lower, np.where(reflected, upper, 0.0))

    # structural columns of the shifted problem, free variables split in two
    columns: List[Tuple[int, float, float]] = []
    for j in range(len(lower)):
        if fixed[j]:
            continue
        if finite_lower[j]:
            columns.append((j, 1.0, upper[j] - lower[j]))
        elif finite_upper[j]:
            columns.append((j, -1.0, math.inf))
        else:
            columns.extend([(j, 1.0, math.inf), (j, -1.0, math.inf)])
    col_var_arr = np.array([c[0] for c in columns], dtype=int)
    col_sign_arr = np.array([c[1] for c in columns], dtype=float)
    col_cap = np.array([c[2] for c in columns], dtype=float)
    struct = len(columns)

    rows = data.matrix.shape[0]
    sign = 1.0 if data.maximize else -1.0
    rhs = data.rhs - data.matrix @ offset
    row_sign = np.where(rhs < 0, -1.0, 1.0)
    rhs = rhs * row_sign
    structural = data.matrix[:, col_var_arr] * col_sign_arr * row_sign[:, None]

    slack_rows = np.flatnonzero(data.slack_sign != 0)
    slack_coef = data.slack_sign * row_sign
    slacks = np.zeros((rows, len(slack_rows)))
    slacks[slack_rows, np.arange(len(slack_rows))] = slack_coef[slack_rows]

    basis = np.full(rows, -1, dtype=int)
    for k, r in enumerate(slack_rows):
        if slack_coef[r] > 0:
            basis[r] = struct + k
    art_rows = np.flatnonzero(basis < 0)
    first_art = struct + len(slack_rows)
    artificials = np.zeros((rows, len(art_rows)))
    artificials[art_rows, np.arange(len(art_rows))] = 1.0
    basis[art_rows] = first_art + np.arange(len(art_rows))

    table = np.hstack([structural.reshape(rows, struct), slacks, artificials])
    cap = np.concatenate([col_cap, np.full(len(slack_rows) + len(art_rows), math.inf)])
    simplex = _BoundedSimplex(table, rhs, cap, basis)

    if len(art_rows):
        phase_one = np.zeros(table.shape[1])
        phase_one[first_art:] = -1.0
        simplex.run(phase_one)
        art_basic = simplex.basis >= first_art
        infeasibility = float(simplex.xb[art_basic].sum())
        if infeasibility > FEAS_TOL * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            return LpResult(LpStatus.INFEASIBLE, iterations=simplex.iterations)
        simplex.cap[first_art:] = 0.0
        simplex.blocked[first_art:] = True
        for row in np.flatnonzero(art_basic):
            candidates = np.flatnonzero(np.abs(simplex.table[row, :first_art]) > PIVOT_TOL)
            candidates = candidates[~np.isin(candidates, simplex.basis)]
            if candidates.size:
                col = candidates[0]
                value = simplex.cap[col] if simplex.at_upper[col] else 0.0
                simplex.enter(row, col, value)

    phase_two = np.zeros(table.shape[1])
    phase_two[:struct] = sign * data.cost[col_var_arr] * col_sign_arr
    if simplex.run(phase_two) is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, iterations=simplex.iterations)

    z = simplex.values()[:struct]
    x = offset.astype(float).copy()
    np.add.at(x, col_var_arr, col_sign_arr * z)
    x = np.clip(x, lower, upper)
    return LpResult(LpStatus.OPTIMAL, x, float(data.cost @ x), simplex.iterations)


def solve_lp(
    model: MilpModel,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    data: Optional[LpData] = None,
) -> LpResult:
    """LP relaxation of model; binaries range over their bounds.

    `lower`/`upper` override the variable bounds without touching the model.
    """
    data = data if data is not None else LpData(model)
    lower = data.lower if lower is None else np.asarray(lower, dtype=float)
    upper = data.upper if upper is None else np.asarray(upper, dtype=float)
    return _solve(data, lower, upper)


class NodeQueue:
    """Open nodes ordered by best LP bound; equal bounds leave in creation order."""

    def __init__(self):
        self._heap: list = []
        self._counter = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, bound: float, var: int, lower: np.ndarray, upper: np.ndarray) -> None:
        heapq.heappush(self._heap, (-bound, next(self._counter), var, lower, upper))

    def pop(self) -> Tuple[float, int, np.ndarray, np.ndarray]:
        neg_bound, _, var, lower, upper = heapq.heappop(self._heap)
        return -neg_bound, var, lower, upper

    def best_bound(self) -> float:
        return -self._heap[0][0] if self._heap else -math.inf


class _Search:
    """Best-first branch-and-bound state in maximization form."""

    def __init__(self, model: MilpModel, options: BnbOptions):
        self.model = model
        self.options = options
        self.data = LpData(model)
        self.sign = 1.0 if self.data.maximize else -1.0
        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_value = -math.inf
        self.pruned_bound = -math.inf
        self.queue = NodeQueue()
        self.nodes = 0

    def lp(self, lower: np.ndarray, upper: np.ndarray) -> LpResult:
        self.nodes += 1
        return solve_lp(self.model, lower, upper, self.data)

    def prunable(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        slack = self.options.gap * max(1.0, abs(self.incumbent_value))
        return bound <= self.incumbent_value + slack

    def branching_var(self, x: np.ndarray) -> Optional[int]:
        binaries = self.data.binaries
        if binaries.size == 0:
            return None
        fractionality = np.abs(x[binaries] - np.round(x[binaries]))
        best = int(np.argmax(fractionality))
        if fractionality[best] <= self.options.int_tol:
            return None
        return int(binaries[best])

    def polish(self, x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """Snap near-integral binaries and re-solve the continuous part."""
        binaries = self.data.binaries
        rounded = np.round(x[binaries])
        if np.array_equal(rounded, x[binaries]):
            return x
        low, up = lower.copy(), upper.copy()
        low[binaries] = up[binaries] = rounded
        fixed = solve_lp(self.model, low, up, self.data)
        if fixed.status is LpStatus.OPTIMAL:
            return fixed.x
        x = x.copy()
        x[binaries] = rounded
        return x

    def offer(self, values: np.ndarray) -> None:
        value = self.sign * float(self.data.cost @ values)
        if value > self.incumbent_value:
            self.incumbent, self.incumbent_value = values, value
            logger.debug(f"New incumbent {self.sign * value:.9g} after {self.nodes} nodes")

    def round_and_fix(self, x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> None:
        """Rounding heuristic: fix every binary to its nearest value and re-solve."""
        binaries = self.data.binaries
        low, up = lower.copy(), upper.copy()
        low[binaries] = up[binaries] = np.round(x[binaries])
        fixed = solve_lp(self.model, low, up, self.data)
        if fixed.status is LpStatus.OPTIMAL:
            self.offer(fixed.x)

    def consider(self, result: LpResult, lower: np.ndarray, upper: np.ndarray) -> None:
        bound = self.sign * result.objective
        if self.prunable(bound):
            self.pruned_bound = max(self.pruned_bound, bound)
            return
        var = self.branching_var(result.x)
        if var is None:
            self.offer(self.polish(result.x, lower, upper))
            return
        if self.options.rounding:
            self.round_and_fix(result.x, lower, upper)
            if self.prunable(bound):
                self.pruned_bound = max(self.pruned_bound, bound)
                return
        self.queue.push(bound, var, lower, upper)

    def frontier_bound(self) -> float:
        return max(self.incumbent_value, self.pruned_bound, self.queue.best_bound())


def solve_milp(model: MilpModel, options: Optional[BnbOptions] = None) -> Solution:
    """Solve model to proven optimality within the configured gap and limits."""
    options = options if options is not None else BnbOptions()
    start = time.perf_counter()
    search = _Search(model, options)
    logger.info(f"Solving model '{model.name}' {model.summary()}")

    root = search.lp(search.data.lower.copy(), search.data.upper.copy())
    if root.status is not LpStatus.OPTIMAL:
        status = SolveStatus(root.status.value)
        bound = -search.sign * math.inf if status is SolveStatus.INFEASIBLE else search.sign * math.inf
        logger.info(f"Root relaxation is {status.value}")
        return Solution(status, None, None, bound, math.inf, 1, time.perf_counter() - start)
    search.consider(root, search.data.lower.copy(), search.data.upper.copy())

    status = SolveStatus.OPTIMAL
    while search.queue:
        if search.nodes >= options.node_limit:
            status = SolveStatus.NODE_LIMIT
            break
        if options.time_limit is not None and time.perf_counter() - start >= options.time_limit:
            status = SolveStatus.TIME_LIMIT
            break
        bound, var, lower, upper = search.queue.pop()
        if search.prunable(bound):
            search.pruned_bound = max(search.pruned_bound, bound)
            continue
        for value in (0.0, 1.0):
            child_lower, child_upper = lower.copy(), upper.copy()
            child_lower[var] = child_upper[var] = value
            result = search.lp(child_lower, child_upper)
            if result.status is LpStatus.OPTIMAL:
                search.consider(result, child_lower, child_upper)

    runtime = time.perf_counter() - start
    bound = search.frontier_bound()
    if search.incumbent is None:
        if status is SolveStatus.OPTIMAL:
            status = SolveStatus.INFEASIBLE
        logger.info(f"No incumbent found: {status.value} after {search.nodes} nodes")
        return Solution(status, None, None, search.sign * bound, math.inf, search.nodes, runtime)

    incumbent = search.incumbent_value
    gap = max(0.0, bound - incumbent) / max(1.0, abs(incumbent))
    if status is SolveStatus.OPTIMAL and gap > DEFAULT_GAP:
        status = SolveStatus.GAP_LIMIT
    objective = search.sign * incumbent
    logger.info(
        f"Finished with status {status.value}: objective {objective:.9g}, gap {gap:.3g}, "
        f"{search.nodes} nodes, {runtime:.3f}s"
    )
    return Solution(
        status, search.incumbent, objective, search.sign * bound, gap, search.nodes, runtime
    )
