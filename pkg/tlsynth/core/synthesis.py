"""
Trajectory and control synthesis on top of the formula encoders.

Trajectory problems only bound and pin the signals. Control problems add
discrete-time LTI dynamics s(k+1) = A s(k) + B u(k) + D, optional input
saturation, and the blended cost lambda*rho - alpha.|s| - beta.|u|.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import BnbOptions, EncoderConfig
from .encode import EXTRACTABLE, EncodedSpec, encode_stl, encode_wstl
from .errors import ConfigError, DimensionMismatch, NotOptimal, UnknownSignal
from .milp import ConstrSense, MilpModel, ObjSense, VarKind
from .monitor import evaluate_bool, robustness, wstl_robustness
from .solver import SolveStatus, solve_milp
from .syntax import Formula, Logic, WeightTable, formula_signals
from .traces import Trace, VarBounds

logger = logging.getLogger('tlsynth.synthesis')

CHECK_TOL = 1e-6


class Norm(Enum):
    L1 = 'l1'
    LINF = 'linf'


@dataclass(frozen=True)
class Saturation:
    """Per-step limit on the input vector norm."""
    norm: Norm
    limit: float

    def __post_init__(self):
        if not isinstance(self.norm, Norm):
            try:
                object.__setattr__(self, 'norm', Norm(str(self.norm).lower()))
            except ValueError:
                raise ConfigError(f"saturation norm must be 'L1' or 'Linf', got {self.norm!r}")
        if not self.limit >= 0:
            raise ConfigError("saturation limit must be nonnegative")


@dataclass
class LtiSystem:
    """Discrete-time linear system with box bounds, initial state and horizon."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_names: Sequence[str]
    input_names: Sequence[str]
    state_bounds: VarBounds
    input_bounds: VarBounds
    x0: np.ndarray
    horizon: int
    saturation: Optional[Saturation] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.D = np.asarray(self.D, dtype=float).reshape(-1)
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        self.state_names = tuple(self.state_names)
        self.input_names = tuple(self.input_names)
        if not isinstance(self.state_bounds, VarBounds):
            self.state_bounds = VarBounds(self.state_bounds)
        if not isinstance(self.input_bounds, VarBounds):
            self.input_bounds = VarBounds(self.input_bounds)
        n, m = len(self.state_names), len(self.input_names)
        shapes = {
            'A': (self.A.shape, (n, n)),
            'B': (self.B.shape, (n, m)),
            'C': (self.C.shape[1:], (n,)),
            'D': (self.D.shape, (n,)),
            'x0': (self.x0.shape, (n,)),
        }
        for label, (got, expected) in shapes.items():
            if got != expected:
                raise DimensionMismatch(f"{label} has shape {got}, expected {expected}")
        if len(set(self.state_names) | set(self.input_names)) != n + m:
            raise DimensionMismatch("state and input names must be unique")
        if self.horizon < 1:
            raise ConfigError("system horizon must be at least 1")
        for name in self.state_names:
            self.state_bounds.finite(name)
        for name in self.input_names:
            self.input_bounds.finite(name)
        for name, value in zip(self.state_names, self.x0):
            lower, upper = self.state_bounds[name]
            if not lower <= value <= upper:
                raise ConfigError(f"initial {name}={value} lies outside [{lower}, {upper}]")

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_inputs(self) -> int:
        return len(self.input_names)

    @property
    def output_names(self) -> Tuple[str, ...]:
        return tuple(f"y{i + 1}" for i in range(self.C.shape[0]))

    def step(self, state: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        return self.A @ state + self.B @ inputs + self.D

    def outputs(self, states: Trace) -> Trace:
        matrix = np.column_stack([states[n] for n in self.state_names])
        y = matrix @ self.C.T
        return Trace({name: y[:, i] for i, name in enumerate(self.output_names)})


@dataclass
class CostWeights:
    """Regularization weights; empty alpha/beta mean zero for every component."""
    lam: float = 1.0
    alpha: Sequence[float] = ()
    beta: Sequence[float] = ()

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if self.lam < 0 or np.any(self.alpha < 0) or np.any(self.beta < 0):
            raise ConfigError("cost weights lambda, alpha and beta must be nonnegative")

    def resolved(self, n_states: int, n_inputs: int) -> Tuple[np.ndarray, np.ndarray]:
        alpha = self.alpha if self.alpha.size else np.zeros(n_states)
        beta = self.beta if self.beta.size else np.zeros(n_inputs)
        if alpha.shape != (n_states,) or beta.shape != (n_inputs,):
            raise DimensionMismatch(
                f"alpha/beta need {n_states}/{n_inputs} entries, got {alpha.size}/{beta.size}"
            )
        return alpha, beta


@dataclass
class SynthesisResult:
    status: SolveStatus
    formula: Formula
    logic: Logic
    states: Optional[Trace] = None
    inputs: Optional[Trace] = None
    outputs: Optional[Trace] = None
    rho_milp: Optional[float] = None
    rho_monitor: Optional[float] = None
    objective: Optional[float] = None
    nodes: int = 0
    runtime: float = 0.0
    weights: Optional[WeightTable] = None

    @property
    def feasible(self) -> bool:
        return self.states is not None

    def trace(self) -> Trace:
        """States with input columns appended; no input is applied at the last step."""
        if self.states is None:
            raise NotOptimal(self.status.value)
        return self.states if self.inputs is None else self.states.merged(self.inputs)


@dataclass
class SynthesisProblem:
    """Encoded problem, open for extra constraints or LP export before solving."""
    spec: EncodedSpec
    formula: Formula
    logic: Logic
    system: Optional[LtiSystem] = None
    weights: Optional[WeightTable] = None
    input_vars: Dict[Tuple[str, int], int] = field(default_factory=dict)

    @property
    def model(self) -> MilpModel:
        return self.spec.model

    def monitor(self, states: Trace) -> float:
        if self.logic is Logic.WSTL:
            return wstl_robustness(self.formula, self.weights, states, 0)
        return robustness(self.formula, states, 0)

    def solve(self, options: Optional[BnbOptions] = None) -> SynthesisResult:
        solution = solve_milp(self.model, options)
        result = SynthesisResult(
            solution.status, self.formula, self.logic, nodes=solution.nodes,
            runtime=solution.runtime, weights=self.weights,
        )
        if solution.status not in EXTRACTABLE or not solution.has_incumbent:
            logger.info(f"Synthesis ended without a trajectory: {solution.status.value}")
            return result
        states = self.spec.extract_trace(solution)
        if self.system is not None:
            states = Trace({name: states[name] for name in self.system.state_names})
            result.inputs = Trace({
                name: [solution.values[self.input_vars[(name, k)]]
                       for k in range(self.system.horizon)]
                for name in self.system.input_names
            })
            result.outputs = self.system.outputs(states)
        result.states = states
        result.rho_milp = self.spec.robustness_value(solution)
        result.rho_monitor = self.monitor(states)
        result.objective = solution.objective
        logger.info(
            f"Synthesis {solution.status.value}: rho_milp={result.rho_milp}, "
            f"rho_monitor={result.rho_monitor}"
        )
        return result


def _encode(
    f: Formula,
    bounds: VarBounds,
    logic: Logic,
    weights: Optional[WeightTable],
    horizon_override: Optional[int],
    config: Optional[EncoderConfig],
) -> EncodedSpec:
    if logic is Logic.STL:
        spec = encode_stl(f, bounds, robust=True, satisfaction=True,
                          horizon_override=horizon_override, config=config)
        spec.model.add_constr([(1.0, spec.rho)], ConstrSense.GE, 0.0, 'rho_nonneg')
        return spec
    if logic is Logic.WSTL:
        table = weights if isinstance(weights, WeightTable) else WeightTable(weights)
        return encode_wstl(f, table, bounds, satisfaction=True,
                           horizon_override=horizon_override, config=config)
    raise ConfigError(f"synthesis supports stl and wstl, not {logic.value}")


def build_trajectory_problem(
    f: Formula,
    bounds: VarBounds,
    initial: Mapping[str, float],
    logic: Logic = Logic.STL,
    weights: Optional[WeightTable] = None,
    config: Optional[EncoderConfig] = None,
    horizon: Optional[int] = None,
) -> SynthesisProblem:
    """Robustness-maximizing trajectory without dynamics."""
    bounds = bounds if isinstance(bounds, VarBounds) else VarBounds(bounds)
    spec = _encode(f, bounds, logic, weights, horizon, config)
    for name, value in initial.items():
        if name not in spec.signals and name in bounds:
            spec.add_signal(name, *bounds.finite(name))
        spec.pin_initial(name, value)
    return SynthesisProblem(spec, f, logic, weights=spec.weights)


def _abs_aux(model: MilpModel, var: int) -> int:
    """Auxiliary variable equal to |var|."""
    source = model.var(var)
    magnitude = max(abs(source.lower), abs(source.upper))
    aux = model.add_var(f"abs.{source.name}", VarKind.CONTINUOUS, 0.0, magnitude)
    model.add_abs_link(var, aux, name=f"abs.{source.name}")
    return aux


def build_control_problem(
    f: Formula,
    system: LtiSystem,
    costs: CostWeights,
    logic: Logic = Logic.STL,
    weights: Optional[WeightTable] = None,
    config: Optional[EncoderConfig] = None,
) -> SynthesisProblem:
    """Control synthesis over the system horizon with dynamics, saturation and cost."""
    for name in formula_signals(f):
        if name not in system.state_names:
            raise UnknownSignal(name)
    alpha, beta = costs.resolved(system.n_states, system.n_inputs)
    spec = _encode(f, system.state_bounds, logic, weights, system.horizon, config)
    model = spec.model
    for name in system.state_names:
        if name not in spec.signals:
            spec.add_signal(name, *system.state_bounds.finite(name))
    problem = SynthesisProblem(spec, f, logic, system, spec.weights)
    H = system.horizon

    for name in system.input_names:
        lower, upper = system.input_bounds.finite(name)
        for k in range(H):
            problem.input_vars[(name, k)] = model.add_var(
                f"{name}_{k}", VarKind.CONTINUOUS, lower, upper
            )

    def state(i: int, k: int) -> int:
        return spec.signal_var(system.state_names[i], k)

    def control(j: int, k: int) -> int:
        return problem.input_vars[(system.input_names[j], k)]

    for k in range(H):
        for i, name in enumerate(system.state_names):
            terms = [(1.0, state(i, k + 1))]
            terms += [(-system.A[i, c], state(c, k)) for c in range(system.n_states)]
            terms += [(-system.B[i, j], control(j, k)) for j in range(system.n_inputs)]
            model.add_constr(terms, ConstrSense.EQ, system.D[i], f"dyn_{name}_{k}")
    for name, value in zip(system.state_names, system.x0):
        spec.pin_initial(name, value)

    input_abs: Dict[Tuple[int, int], int] = {}

    def input_magnitude(j: int, k: int) -> int:
        if (j, k) not in input_abs:
            input_abs[(j, k)] = _abs_aux(model, control(j, k))
        return input_abs[(j, k)]

    saturation = system.saturation
    if saturation is not None:
        for k in range(H):
            if saturation.norm is Norm.L1:
                terms = [(1.0, input_magnitude(j, k)) for j in range(system.n_inputs)]
                model.add_constr(terms, ConstrSense.LE, saturation.limit, f"sat_l1_{k}")
                continue
            for j, name in enumerate(system.input_names):
                model.add_constr([(1.0, control(j, k))], ConstrSense.LE, saturation.limit,
                                 f"sat_max_{name}_{k}")
                model.add_constr([(-1.0, control(j, k))], ConstrSense.LE, saturation.limit,
                                 f"sat_min_{name}_{k}")

    model.set_objective(ObjSense.MAXIMIZE)
    model.add_objective_terms([(1.0, spec.objective_var)], weight=costs.lam)
    effort: List[Tuple[float, int]] = []
    for i in np.flatnonzero(alpha > 0):
        effort += [(alpha[i], _abs_aux(model, state(i, k))) for k in range(H + 1)]
    for j in np.flatnonzero(beta > 0):
        effort += [(beta[j], input_magnitude(j, k)) for k in range(H)]
    if effort:
        model.add_objective_terms(effort, weight=-1.0)
    logger.info(f"Built control problem over horizon {H}: {model.summary()}")
    return problem


def synth_trajectory(
    f: Formula,
    bounds: VarBounds,
    initial: Mapping[str, float],
    logic: Logic = Logic.STL,
    weights: Optional[WeightTable] = None,
    options: Optional[BnbOptions] = None,
    config: Optional[EncoderConfig] = None,
    horizon: Optional[int] = None,
) -> SynthesisResult:
    return build_trajectory_problem(
        f, bounds, initial, logic, weights, config, horizon
    ).solve(options)


def synth_control(
    f: Formula,
    system: LtiSystem,
    costs: CostWeights,
    logic: Logic = Logic.STL,
    weights: Optional[WeightTable] = None,
    options: Optional[BnbOptions] = None,
    config: Optional[EncoderConfig] = None,
) -> SynthesisResult:
    return build_control_problem(f, system, costs, logic, weights, config).solve(options)


@dataclass
class CheckReport:
    dynamics_residual: float
    output_residual: float
    monitor_rho: float
    satisfied: bool
    violations: List[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def _bound_violations(trace: Trace, bounds: VarBounds, names: Sequence[str]) -> List[str]:
    found = []
    for name in names:
        lower, upper = bounds.get(name)
        values = trace[name]
        if np.any(values < lower - CHECK_TOL) or np.any(values > upper + CHECK_TOL):
            found.append(f"{name} leaves its bounds [{lower}, {upper}]")
    return found


def check_result(
    result: SynthesisResult, f: Formula, system: Optional[LtiSystem] = None
) -> CheckReport:
    """Recompute dynamics, outputs and robustness of a result independently."""
    if result.states is None:
        raise NotOptimal(result.status.value)
    states = result.states
    violations: List[str] = []
    dynamics_residual = output_residual = 0.0
    if system is not None:
        s = np.column_stack([states[n] for n in system.state_names])
        u = np.zeros((len(s) - 1, 0))
        if system.n_inputs:
            u = np.column_stack([result.inputs[n] for n in system.input_names])
        predicted = s[:-1] @ system.A.T + u[: len(s) - 1] @ system.B.T + system.D
        dynamics_residual = float(np.max(np.abs(s[1:] - predicted), initial=0.0))
        if dynamics_residual > CHECK_TOL:
            violations.append(f"dynamics residual {dynamics_residual:.3g} exceeds {CHECK_TOL}")
        if result.outputs is not None:
            y = np.column_stack([result.outputs[n] for n in system.output_names])
            output_residual = float(np.max(np.abs(y - s @ system.C.T), initial=0.0))
            if output_residual > CHECK_TOL:
                violations.append(f"output residual {output_residual:.3g} exceeds {CHECK_TOL}")
        violations += _bound_violations(states, system.state_bounds, system.state_names)
        if system.n_inputs:
            violations += _bound_violations(
                result.inputs, system.input_bounds, system.input_names
            )
    if result.logic is Logic.WSTL:
        monitor_rho = wstl_robustness(f, result.weights, states, 0)
    else:
        monitor_rho = robustness(f, states, 0)
    satisfied = evaluate_bool(f, states, 0)
    if monitor_rho < -CHECK_TOL:
        violations.append(f"monitor robustness {monitor_rho:.6g} is negative")
    if result.rho_milp is not None and monitor_rho < result.rho_milp - CHECK_TOL:
        violations.append(
            f"monitor robustness {monitor_rho:.6g} below MILP robustness {result.rho_milp:.6g}"
        )
    if violations:
        logger.warning(f"Result check found {len(violations)} problem(s)")
    return CheckReport(dynamics_residual, output_residual, monitor_rho, satisfied, violations)
