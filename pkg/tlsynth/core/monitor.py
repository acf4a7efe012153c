"""
Formula algorithms over traces: horizon, positive normal form, Boolean
satisfaction and the robustness semantics (classic, AGM, weighted).
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import (
    BatchTraceError, TemporalLogicError, TraceTooShort, UnsupportedNegation,
    UnsupportedOperator
)
from .syntax import (
    Atom, Formula, Kind, Linear, Sense, WeightTable, boolean, conjunction, disjunction,
    formula_signals, weight_size
)
from .traces import Trace, VarBounds

logger = logging.getLogger('tlsynth.monitor')

ROBUSTNESS_METHODS = ('classic', 'agm', 'wstl')

_DUAL = {
    Kind.AND: Kind.OR,
    Kind.OR: Kind.AND,
    Kind.ALWAYS: Kind.EVENTUALLY,
    Kind.EVENTUALLY: Kind.ALWAYS,
}


def horizon(f: Formula) -> int:
    """Number of future steps the truth of f at time t depends on."""
    match f.kind:
        case Kind.PREDICATE | Kind.BOOL_CONST:
            return 0
        case Kind.NOT:
            return horizon(f.child)
        case Kind.AND | Kind.OR:
            return max(horizon(c) for c in f.children)
        case Kind.ALWAYS | Kind.EVENTUALLY:
            return f.interval[1] + horizon(f.child)
        case Kind.UNTIL:
            return f.interval[1] + max(horizon(c) for c in f.children)
    raise ValueError(f"unknown node kind {f.kind}")


def _push_negation(f: Formula, negated: bool) -> Formula:
    match f.kind:
        case Kind.PREDICATE:
            if not negated:
                return f
            pred = f.predicate
            flipped = pred.negated() if isinstance(pred, Linear) else pred.toggled()
            return Formula(Kind.PREDICATE, predicate=flipped, span=f.span)
        case Kind.BOOL_CONST:
            return boolean(f.value != negated, span=f.span)
        case Kind.NOT:
            return _push_negation(f.child, not negated)
        case Kind.AND | Kind.OR:
            kind = _DUAL[f.kind] if negated else f.kind
            children = [_push_negation(c, negated) for c in f.children]
            factory = conjunction if kind is Kind.AND else disjunction
            return factory(children, weight=f.weight, span=f.span)
        case Kind.ALWAYS | Kind.EVENTUALLY:
            kind = _DUAL[f.kind] if negated else f.kind
            child = _push_negation(f.child, negated)
            return Formula(kind, (child,), f.interval, f.weight, span=f.span)
        case Kind.UNTIL:
            if negated:
                raise UnsupportedNegation(
                    f"cannot push a negation through Until at offset {f.span.start}"
                )
            left, right = (_push_negation(c, False) for c in f.children)
            return Formula(Kind.UNTIL, (left, right), f.interval, span=f.span)
    raise ValueError(f"unknown node kind {f.kind}")


def pnf(f: Formula) -> Formula:
    """Push every negation down to the predicates; weights are kept."""
    return _push_negation(f, False)


def negate(f: Formula) -> Formula:
    return _push_negation(f, True)


def _check_length(f: Formula, trace: Trace, t: int) -> None:
    needed = t + horizon(f) + 1
    if t < 0 or len(trace) < needed:
        raise TraceTooShort(needed, len(trace))


def _window(f: Formula, t: int) -> range:
    a, b = f.interval
    return range(t + a, t + b + 1)


# --- Boolean semantics --------------------------------------------------------

def _holds(f: Formula, trace: Trace, t: int) -> bool:
    match f.kind:
        case Kind.PREDICATE:
            pred = f.predicate
            if isinstance(pred, Atom):
                return (trace.value(pred.name, t) >= 0.5) != pred.negated
            value = trace.value(pred.signal, t)
            return value >= pred.threshold if pred.sense is Sense.GE else value <= pred.threshold
        case Kind.BOOL_CONST:
            return f.value
        case Kind.NOT:
            return not _holds(f.child, trace, t)
        case Kind.AND:
            return all(_holds(c, trace, t) for c in f.children)
        case Kind.OR:
            return any(_holds(c, trace, t) for c in f.children)
        case Kind.ALWAYS:
            return all(_holds(f.child, trace, tau) for tau in _window(f, t))
        case Kind.EVENTUALLY:
            return any(_holds(f.child, trace, tau) for tau in _window(f, t))
        case Kind.UNTIL:
            left, right = f.children
            return any(
                _holds(right, trace, tau)
                and all(_holds(left, trace, s) for s in range(t, tau + 1))
                for tau in _window(f, t)
            )
    raise ValueError(f"unknown node kind {f.kind}")


def evaluate_bool(f: Formula, trace: Trace, t: int = 0) -> bool:
    """Boolean satisfaction of f by trace at step t (comparisons are non-strict)."""
    _check_length(f, trace, t)
    return _holds(f, trace, t)


# --- Classic robustness -------------------------------------------------------

def _predicate_rho(pred, trace: Trace, t: int) -> float:
    if isinstance(pred, Atom):
        truth = (trace.value(pred.name, t) >= 0.5) != pred.negated
        return 1.0 if truth else -1.0
    value = trace.value(pred.signal, t)
    return value - pred.threshold if pred.sense is Sense.GE else pred.threshold - value


def _until(rho: Callable[[Formula, int], float], f: Formula, t: int) -> float:
    left, right = f.children
    best = -math.inf
    for tau in _window(f, t):
        prefix = min(rho(left, s) for s in range(t, tau + 1))
        best = max(best, min(rho(right, tau), prefix))
    return best


def _rho(f: Formula, trace: Trace, t: int) -> float:
    match f.kind:
        case Kind.PREDICATE:
            return _predicate_rho(f.predicate, trace, t)
        case Kind.BOOL_CONST:
            return math.inf if f.value else -math.inf
        case Kind.NOT:
            return -_rho(f.child, trace, t)
        case Kind.AND:
            return min(_rho(c, trace, t) for c in f.children)
        case Kind.OR:
            return max(_rho(c, trace, t) for c in f.children)
        case Kind.ALWAYS:
            return min(_rho(f.child, trace, tau) for tau in _window(f, t))
        case Kind.EVENTUALLY:
            return max(_rho(f.child, trace, tau) for tau in _window(f, t))
        case Kind.UNTIL:
            return _until(lambda g, s: _rho(g, trace, s), f, t)
    raise ValueError(f"unknown node kind {f.kind}")


def robustness(f: Formula, trace: Trace, t: int = 0) -> float:
    """Classic quantitative semantics; MTL atoms score +1 or -1."""
    _check_length(f, trace, t)
    return float(_rho(f, trace, t))


# --- AGM robustness -----------------------------------------------------------

def agm_and(values: Sequence[float]) -> float:
    eta = np.asarray(values, dtype=float)
    if np.all(eta > 0):
        return float(np.prod(1.0 + eta) ** (1.0 / len(eta)) - 1.0)
    return float(np.sum(eta[eta <= 0]) / len(eta))


def agm_or(values: Sequence[float]) -> float:
    eta = np.asarray(values, dtype=float)
    if np.all(eta < 0):
        return float(1.0 - np.prod(1.0 - eta) ** (1.0 / len(eta)))
    return float(np.sum(eta[eta >= 0]) / len(eta))


def _agm(f: Formula, trace: Trace, t: int, bounds: VarBounds) -> float:
    match f.kind:
        case Kind.PREDICATE:
            pred = f.predicate
            if isinstance(pred, Atom):
                return _predicate_rho(pred, trace, t)
            lower, upper = bounds.finite(pred.signal)
            scale = max(abs(upper - pred.threshold), abs(lower - pred.threshold))
            if scale == 0:
                return 0.0
            return min(1.0, max(-1.0, _predicate_rho(pred, trace, t) / scale))
        case Kind.BOOL_CONST:
            return 1.0 if f.value else -1.0
        case Kind.NOT:
            return -_agm(f.child, trace, t, bounds)
        case Kind.AND:
            return agm_and([_agm(c, trace, t, bounds) for c in f.children])
        case Kind.OR:
            return agm_or([_agm(c, trace, t, bounds) for c in f.children])
        case Kind.ALWAYS:
            return agm_and([_agm(f.child, trace, tau, bounds) for tau in _window(f, t)])
        case Kind.EVENTUALLY:
            return agm_or([_agm(f.child, trace, tau, bounds) for tau in _window(f, t)])
        case Kind.UNTIL:
            raise UnsupportedOperator("AGM robustness is not defined for Until")
    raise ValueError(f"unknown node kind {f.kind}")


def agm_robustness(f: Formula, trace: Trace, t: int, bounds: Optional[VarBounds]) -> float:
    """Normalized robustness in [-1, 1]; predicates are scaled by their bound range."""
    bounds = bounds if bounds is not None else VarBounds()
    for signal in formula_signals(f):
        bounds.finite(signal)
    _check_length(f, trace, t)
    return _agm(f, trace, t, bounds)


# --- Weighted robustness ------------------------------------------------------

def _wrho(f: Formula, weights: WeightTable, trace: Trace, t: int) -> float:
    match f.kind:
        case Kind.PREDICATE:
            return _predicate_rho(f.predicate, trace, t)
        case Kind.BOOL_CONST:
            return math.inf if f.value else -math.inf
        case Kind.NOT:
            return -_wrho(f.child, weights, trace, t)
        case Kind.AND | Kind.OR:
            w = weights.resolve(f.weight, len(f.children))
            scores = [wi * _wrho(c, weights, trace, t) for wi, c in zip(w, f.children)]
            return min(scores) if f.kind is Kind.AND else max(scores)
        case Kind.ALWAYS | Kind.EVENTUALLY:
            w = weights.resolve(f.weight, weight_size(f))
            scores = [
                wi * _wrho(f.child, weights, trace, tau) for wi, tau in zip(w, _window(f, t))
            ]
            return min(scores) if f.kind is Kind.ALWAYS else max(scores)
        case Kind.UNTIL:
            return _until(lambda g, s: _wrho(g, weights, trace, s), f, t)
    raise ValueError(f"unknown node kind {f.kind}")


def wstl_robustness(f: Formula, weights: WeightTable, trace: Trace, t: int = 0) -> float:
    """Weighted semantics: And/G take min of w_i * r_i, Or/F take max."""
    if not isinstance(weights, WeightTable):
        weights = WeightTable(weights)
    _check_length(f, trace, t)
    return float(_wrho(f, weights, trace, t))


# --- Dispatch -----------------------------------------------------------------

def evaluate_robustness(
    f: Formula,
    trace: Trace,
    method: str = 'classic',
    t: int = 0,
    bounds: Optional[VarBounds] = None,
    weights: Optional[WeightTable] = None,
) -> float:
    """Single-trace robustness by method name."""
    if method == 'classic':
        return robustness(f, trace, t)
    if method == 'agm':
        return agm_robustness(f, trace, t, bounds)
    if method == 'wstl':
        return wstl_robustness(f, weights if weights is not None else WeightTable(), trace, t)
    raise ValueError(f"unknown robustness method '{method}', expected one of {ROBUSTNESS_METHODS}")


def batch_robustness(
    f: Formula,
    traces: Sequence[Trace],
    method: str = 'classic',
    bounds: Optional[VarBounds] = None,
    weights: Optional[WeightTable] = None,
    t: int = 0,
) -> np.ndarray:
    """Robustness at step t of every trace, in input order."""
    results: List[float] = []
    for index, trace in enumerate(traces):
        try:
            results.append(evaluate_robustness(f, trace, method, t, bounds, weights))
        except TemporalLogicError as exc:
            raise BatchTraceError(index, exc) from exc
    logger.debug(f"Evaluated {method} robustness on {len(results)} traces")
    return np.array(results, dtype=float)

