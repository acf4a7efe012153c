"""Seeded random formulas, traces and MILPs shared by the property suites."""

import itertools
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from tlsynth.core.milp import ConstrSense, MilpModel, ObjSense, VarKind
from tlsynth.core.monitor import horizon
from tlsynth.core.solver import LpStatus, solve_lp
from tlsynth.core.syntax import (
    Formula, Kind, Sense, WeightTable, always, conjunction, disjunction, eventually, linear,
    negation, until
)
from tlsynth.core.traces import Trace

SIGNALS = ('s', 'r')
THRESHOLDS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def random_interval(rng: np.random.Generator, max_bound: int = 2) -> Tuple[int, int]:
    a = int(rng.integers(0, max_bound + 1))
    b = int(rng.integers(a, max_bound + 1))
    return a, b


def random_formula(
    rng: np.random.Generator,
    depth: int = 4,
    signals: Sequence[str] = SIGNALS,
    thresholds: Sequence[float] = THRESHOLDS,
    until_allowed: bool = True,
    negation_allowed: bool = True,
    max_bound: int = 2,
) -> Formula:
    """Random STL formula; with max_bound 2 and depth 4 the horizon stays <= 8."""
    if depth <= 0 or rng.random() < 0.25:
        signal = signals[int(rng.integers(len(signals)))]
        sense = Sense.GE if rng.random() < 0.5 else Sense.LE
        return linear(signal, sense, float(thresholds[int(rng.integers(len(thresholds)))]))

    kinds = ['and', 'or', 'always', 'eventually']
    if negation_allowed:
        kinds.append('not')
    if until_allowed:
        kinds.append('until')
    choice = kinds[int(rng.integers(len(kinds)))]

    def sub(**overrides) -> Formula:
        options = dict(
            signals=signals, thresholds=thresholds, until_allowed=until_allowed,
            negation_allowed=negation_allowed, max_bound=max_bound,
        )
        options.update(overrides)
        return random_formula(rng, depth - 1, **options)

    if choice == 'not':
        # negated subtrees stay Until-free so positive normal form exists
        return negation(sub(until_allowed=False))
    if choice in ('and', 'or'):
        children = [sub() for _ in range(int(rng.integers(2, 4)))]
        return conjunction(children) if choice == 'and' else disjunction(children)
    a, b = random_interval(rng, max_bound)
    if choice == 'always':
        return always(a, b, sub())
    if choice == 'eventually':
        return eventually(a, b, sub())
    return until(a, b, sub(), sub())


def random_trace(
    rng: np.random.Generator,
    length: int,
    signals: Sequence[str] = SIGNALS,
    low: int = -3,
    high: int = 3,
    ties: bool = True,
) -> Trace:
    """Half-integer samples so comparisons against integer thresholds hit ties sometimes.

    With ties=False every sample is shifted by a quarter, so no predicate over
    THRESHOLDS has zero robustness.
    """
    offset = 0.0 if ties else 0.25
    return Trace({
        name: rng.integers(2 * low, 2 * high + 1, size=length) / 2.0 + offset
        for name in signals
    })


def trace_for(rng: np.random.Generator, f: Formula, extra: int = 0, ties: bool = True) -> Trace:
    return random_trace(rng, horizon(f) + 1 + extra, ties=ties)


def random_weights(rng: np.random.Generator, f: Formula) -> Tuple[Formula, WeightTable]:
    """Tag every weightable node of f with its own random positive vector."""
    table: Dict[str, Sequence[float]] = {}
    counter = itertools.count()

    def tag(node: Formula) -> Formula:
        children = tuple(tag(c) for c in node.children)
        if node.kind in (Kind.AND, Kind.OR):
            size = len(children)
        elif node.kind in (Kind.ALWAYS, Kind.EVENTUALLY):
            size = node.interval[1] - node.interval[0] + 1
        else:
            return Formula(node.kind, children, node.interval, None, node.predicate, node.value)
        name = f"w{next(counter)}"
        table[name] = list(np.round(rng.uniform(0.1, 2.0, size=size), 3))
        return Formula(node.kind, children, node.interval, name, node.predicate, node.value)

    return tag(f), WeightTable(table)


def ones_like(weights: WeightTable) -> WeightTable:
    return WeightTable({name: [1.0] * len(vector) for name, vector in weights.items()})


def random_milp(
    rng: np.random.Generator,
    n_binary: Optional[int] = None,
    n_continuous: Optional[int] = None,
) -> MilpModel:
    """Small bounded MILP with at most 8 binaries; always has a bounded LP relaxation."""
    n_binary = int(rng.integers(1, 9)) if n_binary is None else n_binary
    n_continuous = int(rng.integers(0, 3)) if n_continuous is None else n_continuous
    model = MilpModel('random')
    ids = [model.add_binary(f"b{i}") for i in range(n_binary)]
    ids += [
        model.add_var(f"x{i}", VarKind.CONTINUOUS, -float(rng.integers(0, 4)),
                      float(rng.integers(1, 5)))
        for i in range(n_continuous)
    ]
    for row in range(int(rng.integers(1, 5))):
        coefs = rng.integers(-4, 5, size=len(ids)).astype(float)
        if not coefs.any():
            coefs[0] = 1.0
        sense = [ConstrSense.LE, ConstrSense.GE][int(rng.integers(2))]
        rhs = float(rng.integers(-3, 6)) if sense is ConstrSense.LE else float(rng.integers(-6, 3))
        model.add_constr(
            [(c, v) for c, v in zip(coefs, ids) if c != 0] or [(1.0, ids[0])], sense, rhs,
            f"row{row}"
        )
    sense = ObjSense.MAXIMIZE if rng.random() < 0.5 else ObjSense.MINIMIZE
    model.set_objective(sense, [(float(c), v) for c, v in zip(rng.integers(-5, 6, len(ids)), ids)])
    return model


def enumerate_milp(model: MilpModel) -> Optional[float]:
    """Best objective over every binary assignment, each completed by an LP; None if infeasible."""
    lower, upper = model.bounds_arrays()
    binaries = model.binaries
    best = None
    maximize = model.objective_sense is ObjSense.MAXIMIZE
    for assignment in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lo, up = lower.copy(), upper.copy()
        lo[binaries] = assignment
        up[binaries] = assignment
        result = solve_lp(model, lo, up)
        if result.status is not LpStatus.OPTIMAL:
            continue
        if best is None or (result.objective > best if maximize else result.objective < best):
            best = result.objective
    return best
