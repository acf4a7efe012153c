"""
JSON problem files for the `synth` command.

    {
      "logic": "stl",
      "formula": "(G[1,5] (s1 >= 7) || G[1,5] (s2 <= 2)) && ...",
      "horizon": 10,
      "signals": {"s1": [0, 10], "s2": [0, 10]},
      "initial": {"s1": 0, "s2": 0},
      "weights": {"p1": [0.5, 0.5]},
      "system": {"A": [[1, 1], [0, 1]], "B": ..., "C": ..., "D": ...,
                 "state_names": ["s1", "s2"], "input_names": ["u1", "u2"],
                 "state_bounds": {...}, "input_bounds": {...}, "x0": [0, 0],
                 "saturation": {"norm": "L1", "limit": 1}},
      "costs": {"lambda": 1, "alpha": [0, 0], "beta": [0, 0]}
    }

Only "logic" and "formula" are required. With a "system" block the file
describes a control problem; without one, a trajectory problem.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from .config import EncoderConfig
from .errors import ConfigError
from .synthesis import (
    CostWeights, LtiSystem, Saturation, SynthesisProblem, build_control_problem,
    build_trajectory_problem
)
from .syntax import Formula, Logic, WeightTable, parse
from .traces import VarBounds

logger = logging.getLogger('tlsynth.config')

TOP_LEVEL_KEYS = frozenset(
    {'logic', 'formula', 'horizon', 'signals', 'initial', 'weights', 'system', 'costs'}
)
SYSTEM_KEYS = frozenset({
    'A', 'B', 'C', 'D', 'state_names', 'input_names', 'state_bounds', 'input_bounds', 'x0',
    'saturation',
})
COST_KEYS = frozenset({'lambda', 'alpha', 'beta'})


def _check_keys(section: str, data: Mapping[str, Any], allowed: frozenset) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def _section(data: Mapping[str, Any], key: str, kind: type, section: str = 'config'):
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{section}: '{key}' must be a {kind.__name__}")
    return value


def _matrix(value: Any, label: str) -> list:
    """Nested numeric list with rows of equal length."""
    if not isinstance(value, list) or not value:
        raise ConfigError(f"system: '{label}' must be a non-empty nested list")
    rows = value if all(isinstance(r, list) for r in value) else [value]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"system: '{label}' is not rectangular")
    for row in rows:
        for cell in row:
            if isinstance(cell, bool) or not isinstance(cell, (int, float)):
                raise ConfigError(f"system: '{label}' has non-numeric entry {cell!r}")
    return value


def _system(data: Mapping[str, Any], horizon: Optional[int], signals: VarBounds) -> LtiSystem:
    _check_keys('system', data, SYSTEM_KEYS)
    for key in ('A', 'B', 'C', 'state_names', 'input_names', 'x0', 'input_bounds'):
        if key not in data:
            raise ConfigError(f"system: missing '{key}'")
    if horizon is None:
        raise ConfigError("config: 'horizon' is required with a system block")
    state_names = _section(data, 'state_names', list, 'system')
    saturation = None
    if data.get('saturation') is not None:
        block = _section(data, 'saturation', dict, 'system')
        _check_keys('saturation', block, frozenset({'norm', 'limit'}))
        if 'norm' not in block or 'limit' not in block:
            raise ConfigError("saturation needs 'norm' and 'limit'")
        saturation = Saturation(block['norm'], float(block['limit']))
    try:
        return LtiSystem(
            A=_matrix(data['A'], 'A'),
            B=_matrix(data['B'], 'B'),
            C=_matrix(data['C'], 'C'),
            D=data.get('D', [0.0] * len(state_names)),
            state_names=[str(n) for n in state_names],
            input_names=[str(n) for n in _section(data, 'input_names', list, 'system')],
            state_bounds=VarBounds(data['state_bounds']) if 'state_bounds' in data else signals,
            input_bounds=VarBounds(_section(data, 'input_bounds', dict, 'system')),
            x0=data['x0'],
            horizon=horizon,
            saturation=saturation,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from None


@dataclass
class SystemConfig:
    """Validated content of a problem file."""
    logic: Logic
    formula_text: str
    horizon: Optional[int] = None
    signals: VarBounds = field(default_factory=VarBounds)
    initial: Dict[str, float] = field(default_factory=dict)
    weights: WeightTable = field(default_factory=WeightTable)
    system: Optional[LtiSystem] = None
    costs: CostWeights = field(default_factory=CostWeights)

    @classmethod
    def from_dict(cls, data: Any) -> 'SystemConfig':
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        _check_keys('config', data, TOP_LEVEL_KEYS)
        for key in ('logic', 'formula'):
            if key not in data:
                raise ConfigError(f"config: missing '{key}'")
        try:
            logic = Logic(str(data['logic']).lower())
        except ValueError:
            raise ConfigError(f"config: unknown logic {data['logic']!r}") from None
        horizon = None
        if data.get('horizon') is not None:
            horizon = _section(data, 'horizon', int)
            if horizon < 1:
                raise ConfigError("config: 'horizon' must be at least 1")
        signals = VarBounds(_section(data, 'signals', dict)) if 'signals' in data else VarBounds()
        initial = {}
        if 'initial' in data:
            for name, value in _section(data, 'initial', dict).items():
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"initial: value of '{name}' must be a number")
                initial[str(name)] = float(value)
        weights = WeightTable(_section(data, 'weights', dict)) if 'weights' in data else None
        system = None
        if data.get('system') is not None:
            system = _system(_section(data, 'system', dict), horizon, signals)
        costs = CostWeights()
        if 'costs' in data:
            block = _section(data, 'costs', dict)
            _check_keys('costs', block, COST_KEYS)
            try:
                costs = CostWeights(
                    lam=float(block.get('lambda', 1.0)),
                    alpha=block.get('alpha', ()),
                    beta=block.get('beta', ()),
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"costs: {exc}") from None
        return cls(
            logic, _section(data, 'formula', str), horizon, signals, initial,
            weights if weights is not None else WeightTable(), system, costs,
        )

    def formula(self) -> Formula:
        return parse(self.formula_text, self.logic, self.weights)

    def build_problem(self, encoder: Optional[EncoderConfig] = None) -> SynthesisProblem:
        """Encode the configured trajectory or control problem."""
        f = self.formula()
        if self.system is not None:
            return build_control_problem(
                f, self.system, self.costs, self.logic, self.weights, encoder
            )
        return build_trajectory_problem(
            f, self.signals, self.initial, self.logic, self.weights, encoder, self.horizon
        )


def load_system_config(path: Union[str, Path]) -> SystemConfig:
    """Read and validate a problem file; OSError and JSONDecodeError propagate."""
    with open(path, encoding='utf-8') as handle:
        data = json.load(handle)
    config = SystemConfig.from_dict(data)
    logger.info(
        f"Loaded {config.logic.value} problem from {path}"
        f"{' with dynamics' if config.system is not None else ''}"
    )
    return config
