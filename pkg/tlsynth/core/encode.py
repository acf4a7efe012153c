"""
Recursive translation of formula trees into MILP variables and constraints.

Each node is encoded once per time step it is needed at; structurally equal
subformulas at the same step share their variable. Boolean modes (STL, MTL)
attach a binary to every node; the weighted mode attaches a continuous
robustness variable and encodes min/max exactly with selector binaries.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .config import EncoderConfig
from .errors import (
    DuplicateName, HorizonOverrideTooSmall, NotOptimal, UnknownSignal, UnsupportedOperator
)
from .milp import ConstrSense, MilpModel, ObjSense, VarKind
from .monitor import horizon, pnf
from .solver import Solution, SolveStatus
from .syntax import (
    Atom, Formula, Kind, Linear, Logic, Sense, WeightTable, formula_atoms, formula_signals,
    iter_nodes, weight_size
)
from .traces import Trace, VarBounds

logger = logging.getLogger('tlsynth.encode')

EXTRACTABLE = frozenset({SolveStatus.OPTIMAL, SolveStatus.GAP_LIMIT})


@dataclass
class EncodedSpec:
    """A model plus the maps tying it back to the formula."""
    model: MilpModel
    formula: Formula
    logic: Logic
    horizon: int
    satisfaction: bool
    signals: List[str] = field(default_factory=list)
    signal_vars: Dict[Tuple[str, int], int] = field(default_factory=dict)
    node_vars: Dict[Tuple[Formula, int], int] = field(default_factory=dict)
    root: Optional[int] = None
    rho: Optional[int] = None
    big_m: Dict[Linear, float] = field(default_factory=dict)
    weights: Optional[WeightTable] = None
    _pins: int = 0

    def add_signal(self, name: str, lower: float, upper: float) -> List[int]:
        """Declare variables name_0 .. name_H for a signal the formula may not mention."""
        if name in self.signals:
            raise DuplicateName(name)
        ids = [
            self.model.add_var(f"{name}_{k}", VarKind.CONTINUOUS, lower, upper)
            for k in range(self.horizon + 1)
        ]
        self.signals.append(name)
        self.signal_vars.update({(name, k): var for k, var in enumerate(ids)})
        return ids

    def signal_var(self, name: str, step: int) -> int:
        try:
            return self.signal_vars[(name, step)]
        except KeyError:
            raise UnknownSignal(name) from None

    def pin_initial(self, signal: str, value: float) -> int:
        """Fix the step-0 value of a signal."""
        var = self.signal_var(signal, 0)
        self._pins += 1
        return self.model.add_constr(
            [(1.0, var)], ConstrSense.EQ, float(value), f"init_{signal}_{self._pins}"
        )

    @property
    def objective_var(self) -> Optional[int]:
        """Variable whose optimum is the reported robustness."""
        return self.rho if self.rho is not None else (
            self.root if self.logic is Logic.WSTL else None
        )

    def robustness_value(self, solution: Solution) -> Optional[float]:
        var = self.objective_var
        if var is None or not solution.has_incumbent:
            return None
        return float(solution.values[var])

    def extract_trace(self, solution: Solution) -> Trace:
        """Signal values of the incumbent over steps 0 .. horizon."""
        if solution.status not in EXTRACTABLE or not solution.has_incumbent:
            raise NotOptimal(solution.status.value)
        return Trace({
            name: [solution.values[self.signal_vars[(name, k)]] for k in range(self.horizon + 1)]
            for name in self.signals
        })


class _Literal(NamedTuple):
    """Binary variable, or its complement when `negated`."""
    var: int
    negated: bool = False

    @property
    def coef(self) -> float:
        return -1.0 if self.negated else 1.0

    @property
    def const(self) -> float:
        return 1.0 if self.negated else 0.0


_TAGS = {
    Kind.PREDICATE: 'pred', Kind.BOOL_CONST: 'const', Kind.AND: 'and', Kind.OR: 'or',
    Kind.ALWAYS: 'always', Kind.EVENTUALLY: 'eventually', Kind.UNTIL: 'until',
}


class _Encoder:
    """Shared bookkeeping for the three encoders."""

    def __init__(self, spec: EncodedSpec, config: EncoderConfig):
        self.spec = spec
        self.model = spec.model
        self.config = config
        self.node_ids: Dict[Formula, int] = {}

    def label(self, node: Formula, t: int, prefix: str) -> str:
        index = self.node_ids.setdefault(node, len(self.node_ids))
        return f"{prefix}.{_TAGS[node.kind]}{index}.{t}"

    def declare_signals(self, names: Sequence[str], bounds: VarBounds) -> None:
        for name in names:
            self.spec.add_signal(name, *bounds.finite(name))

    def declare_atoms(self, names: Sequence[str]) -> None:
        for name in names:
            ids = [
                self.model.add_var(f"{name}_{k}", VarKind.BINARY, 0.0, 1.0)
                for k in range(self.spec.horizon + 1)
            ]
            self.spec.signals.append(name)
            self.spec.signal_vars.update({(name, k): var for k, var in enumerate(ids)})

    # Boolean patterns over literals

    def conjoin(self, z: int, children: Sequence[_Literal], tag: str) -> None:
        for i, lit in enumerate(children):
            self.model.add_constr(
                [(1.0, z), (-lit.coef, lit.var)], ConstrSense.LE, lit.const, f"{tag}_le{i}"
            )
        terms = [(1.0, z)] + [(-lit.coef, lit.var) for lit in children]
        rhs = sum(lit.const for lit in children) - (len(children) - 1)
        self.model.add_constr(terms, ConstrSense.GE, rhs, f"{tag}_ge")

    def disjoin(self, z: int, children: Sequence[_Literal], tag: str) -> None:
        for i, lit in enumerate(children):
            self.model.add_constr(
                [(1.0, z), (-lit.coef, lit.var)], ConstrSense.GE, lit.const, f"{tag}_ge{i}"
            )
        terms = [(1.0, z)] + [(-lit.coef, lit.var) for lit in children]
        rhs = sum(lit.const for lit in children)
        self.model.add_constr(terms, ConstrSense.LE, rhs, f"{tag}_le")


class _BooleanEncoder(_Encoder):
    """STL (plain or robust) and MTL: one binary per node and step."""

    def __init__(self, spec: EncodedSpec, config: EncoderConfig, robust_margin: float = 0.0):
        super().__init__(spec, config)
        self.robust_margin = robust_margin
        self.constants: Dict[bool, int] = {}

    def literal(self, node: Formula, t: int) -> _Literal:
        if isinstance(node.predicate, Atom):
            return _Literal(self.spec.signal_var(node.predicate.name, t), node.predicate.negated)
        if node.kind is Kind.BOOL_CONST:
            if node.value not in self.constants:
                value = 1.0 if node.value else 0.0
                self.constants[node.value] = self.model.add_var(
                    f"const_{str(node.value).lower()}", VarKind.BINARY, value, value
                )
            return _Literal(self.constants[node.value])
        key = (node, t)
        if key not in self.spec.node_vars:
            self.spec.node_vars[key] = self.encode(node, t)
        return _Literal(self.spec.node_vars[key])

    def window(self, node: Formula, t: int) -> List[_Literal]:
        a, b = node.interval
        return [self.literal(node.child, tau) for tau in range(t + a, t + b + 1)]

    def encode(self, node: Formula, t: int) -> int:
        tag = self.label(node, t, 'z')
        z = self.model.add_var(tag, VarKind.BINARY, 0.0, 1.0)
        match node.kind:
            case Kind.PREDICATE:
                self.predicate(node.predicate, z, t, tag)
            case Kind.AND:
                self.conjoin(z, [self.literal(c, t) for c in node.children], tag)
            case Kind.OR:
                self.disjoin(z, [self.literal(c, t) for c in node.children], tag)
            case Kind.ALWAYS:
                self.conjoin(z, self.window(node, t), tag)
            case Kind.EVENTUALLY:
                self.disjoin(z, self.window(node, t), tag)
            case Kind.UNTIL:
                left, right = node.children
                a, b = node.interval
                branches = []
                for tau in range(t + a, t + b + 1):
                    d = self.model.add_var(f"d{tag[1:]}.{tau}", VarKind.BINARY, 0.0, 1.0)
                    prefix = [self.literal(left, s) for s in range(t, tau + 1)]
                    self.conjoin(d, [self.literal(right, tau)] + prefix, f"d{tag[1:]}.{tau}")
                    branches.append(_Literal(d))
                self.disjoin(z, branches, tag)
            case _:
                raise UnsupportedOperator(f"{node.kind.value} must be removed before encoding")
        return z

    def predicate(self, pred: Linear, z: int, t: int, tag: str) -> None:
        s = self.spec.signal_var(pred.signal, t)
        a = 1.0 if pred.sense is Sense.GE else -1.0
        k = -a * pred.threshold
        big_m = self.spec.big_m[pred] + self.robust_margin
        rho = self.spec.rho
        holds = [(a, s), (-big_m, z)]
        fails = [(a, s), (-big_m, z)]
        if rho is not None:
            holds.append((-1.0, rho))
            fails.append((-1.0, rho))
        self.model.add_constr(holds, ConstrSense.GE, -k - big_m, f"{tag}_holds")
        self.model.add_constr(fails, ConstrSense.LE, -k - self.config.delta, f"{tag}_fails")


class _WeightedEncoder(_Encoder):
    """wSTL: continuous robustness per node and step, exact weighted min/max."""

    def __init__(self, spec: EncodedSpec, config: EncoderConfig, bounds: VarBounds):
        super().__init__(spec, config)
        self.bounds = bounds
        self.magnitudes: Dict[Formula, float] = {}

    def magnitude(self, node: Formula) -> float:
        """Bound B with |r(node, t)| <= B for every admissible trace."""
        if node in self.magnitudes:
            return self.magnitudes[node]
        weights = self.spec.weights
        match node.kind:
            case Kind.PREDICATE:
                lower, upper = self.bounds.finite(node.predicate.signal)
                c = node.predicate.threshold
                value = max(abs(upper - c), abs(lower - c))
            case Kind.AND | Kind.OR:
                w = weights.resolve(node.weight, len(node.children))
                value = max(wi * self.magnitude(c) for wi, c in zip(w, node.children))
            case Kind.ALWAYS | Kind.EVENTUALLY:
                w = weights.resolve(node.weight, weight_size(node))
                value = max(w) * self.magnitude(node.child)
            case Kind.UNTIL:
                value = max(self.magnitude(c) for c in node.children)
            case _:
                raise UnsupportedOperator(
                    f"{node.kind.value} nodes cannot be encoded in weighted robustness mode"
                )
        self.magnitudes[node] = value
        return value

    def var(self, node: Formula, t: int) -> int:
        key = (node, t)
        if key not in self.spec.node_vars:
            self.spec.node_vars[key] = self.encode(node, t)
        return self.spec.node_vars[key]

    def extremum(
        self, r: int, items: Sequence[Tuple[float, int]], largest: bool, big_m: float, tag: str
    ) -> None:
        """r == min (or max) of coef * var over items, using one selector per item."""
        if len(items) == 1:
            coef, var = items[0]
            self.model.add_constr([(1.0, r), (-coef, var)], ConstrSense.EQ, 0.0, f"{tag}_eq")
            return
        outer, inner = (ConstrSense.GE, ConstrSense.LE) if largest else (ConstrSense.LE,
                                                                         ConstrSense.GE)
        slack = big_m if largest else -big_m
        selectors = []
        for i, (coef, var) in enumerate(items):
            sigma = self.model.add_var(f"sigma{tag[1:]}.{i}", VarKind.BINARY, 0.0, 1.0)
            selectors.append((1.0, sigma))
            self.model.add_constr([(1.0, r), (-coef, var)], outer, 0.0, f"{tag}_bound{i}")
            self.model.add_constr(
                [(1.0, r), (-coef, var), (slack, sigma)], inner, slack, f"{tag}_pick{i}"
            )
        self.model.add_constr(selectors, ConstrSense.EQ, 1.0, f"{tag}_one")

    def encode(self, node: Formula, t: int) -> int:
        tag = self.label(node, t, 'r')
        bound = self.magnitude(node)
        r = self.model.add_var(tag, VarKind.CONTINUOUS, -bound, bound)
        weights = self.spec.weights
        match node.kind:
            case Kind.PREDICATE:
                pred = node.predicate
                s = self.spec.signal_var(pred.signal, t)
                a = 1.0 if pred.sense is Sense.GE else -1.0
                self.model.add_constr(
                    [(1.0, r), (-a, s)], ConstrSense.EQ, -a * pred.threshold, f"{tag}_def"
                )
            case Kind.AND | Kind.OR:
                w = weights.resolve(node.weight, len(node.children))
                items = [(wi, self.var(c, t)) for wi, c in zip(w, node.children)]
                self.extremum(r, items, node.kind is Kind.OR, 2 * bound, tag)
            case Kind.ALWAYS | Kind.EVENTUALLY:
                w = weights.resolve(node.weight, weight_size(node))
                a, _ = node.interval
                items = [(wi, self.var(node.child, t + a + i)) for i, wi in enumerate(w)]
                self.extremum(r, items, node.kind is Kind.EVENTUALLY, 2 * bound, tag)
            case Kind.UNTIL:
                left, right = node.children
                a, b = node.interval
                branches = []
                for tau in range(t + a, t + b + 1):
                    m = self.model.add_var(f"m{tag[1:]}.{tau}", VarKind.CONTINUOUS, -bound, bound)
                    items = [(1.0, self.var(right, tau))]
                    items += [(1.0, self.var(left, s)) for s in range(t, tau + 1)]
                    self.extremum(m, items, False, 2 * bound, f"m{tag[1:]}.{tau}")
                    branches.append((1.0, m))
                self.extremum(r, branches, True, 2 * bound, tag)
        return r


def _resolve_horizon(f: Formula, horizon_override: Optional[int]) -> int:
    needed = horizon(f)
    if horizon_override is None:
        return needed
    if horizon_override < needed:
        raise HorizonOverrideTooSmall(horizon_override, needed)
    return int(horizon_override)


def _log_summary(spec: EncodedSpec) -> None:
    logger.info(
        f"Encoded {spec.logic.name} specification over horizon {spec.horizon}: "
        f"{spec.model.summary()}"
    )


def encode_stl(
    f: Formula,
    bounds: VarBounds,
    robust: bool = True,
    satisfaction: bool = True,
    horizon_override: Optional[int] = None,
    config: Optional[EncoderConfig] = None,
) -> EncodedSpec:
    """Binary encoding of an STL formula, optionally maximizing a global margin rho."""
    config = config if config is not None else EncoderConfig()
    normal = pnf(f)
    spec = EncodedSpec(MilpModel('stl'), normal, Logic.STL,
                       _resolve_horizon(normal, horizon_override), satisfaction)
    for node_pred in dict.fromkeys(
        n.predicate for n in iter_nodes(normal) if isinstance(n.predicate, Linear)
    ):
        lower, upper = bounds.finite(node_pred.signal)
        c = node_pred.threshold
        spec.big_m[node_pred] = max(abs(upper - c), abs(lower - c)) + config.big_m_margin
    encoder = _BooleanEncoder(spec, config)
    encoder.declare_signals(formula_signals(normal), bounds)
    if robust:
        rho_max = max(spec.big_m.values(), default=0.0)
        spec.rho = spec.model.add_var('rho', VarKind.CONTINUOUS, -rho_max, rho_max)
        encoder.robust_margin = rho_max
    root = encoder.literal(normal, 0)
    spec.root = root.var
    if satisfaction:
        spec.model.add_constr([(root.coef, root.var)], ConstrSense.EQ, 1.0 - root.const, 'root')
    spec.model.set_objective(ObjSense.MAXIMIZE)
    if spec.rho is not None:
        spec.model.add_objective_terms([(1.0, spec.rho)])
    _log_summary(spec)
    return spec


def encode_mtl(
    f: Formula,
    horizon_override: Optional[int] = None,
    satisfaction: bool = True,
    config: Optional[EncoderConfig] = None,
) -> EncodedSpec:
    """Binary encoding over shared per-step proposition binaries."""
    config = config if config is not None else EncoderConfig()
    normal = pnf(f)
    spec = EncodedSpec(MilpModel('mtl'), normal, Logic.MTL,
                       _resolve_horizon(normal, horizon_override), satisfaction)
    encoder = _BooleanEncoder(spec, config)
    encoder.declare_atoms(formula_atoms(normal))
    root = encoder.literal(normal, 0)
    spec.root = root.var
    if satisfaction:
        spec.model.add_constr([(root.coef, root.var)], ConstrSense.EQ, 1.0 - root.const, 'root')
    spec.model.set_objective(ObjSense.MAXIMIZE)
    _log_summary(spec)
    return spec


def encode_wstl(
    f: Formula,
    weights: WeightTable,
    bounds: VarBounds,
    satisfaction: bool = True,
    horizon_override: Optional[int] = None,
    config: Optional[EncoderConfig] = None,
) -> EncodedSpec:
    """Exact weighted-robustness encoding; the objective maximizes the root value."""
    config = config if config is not None else EncoderConfig()
    weights = weights if isinstance(weights, WeightTable) else WeightTable(weights)
    normal = pnf(f)
    spec = EncodedSpec(MilpModel('wstl'), normal, Logic.WSTL,
                       _resolve_horizon(normal, horizon_override), satisfaction, weights=weights)
    encoder = _WeightedEncoder(spec, config, bounds)
    encoder.magnitude(normal)
    encoder.declare_signals(formula_signals(normal), bounds)
    spec.root = encoder.var(normal, 0)
    if satisfaction:
        spec.model.add_constr([(1.0, spec.root)], ConstrSense.GE, 0.0, 'root')
    spec.model.set_objective(ObjSense.MAXIMIZE, [(1.0, spec.root)])
    _log_summary(spec)
    return spec

