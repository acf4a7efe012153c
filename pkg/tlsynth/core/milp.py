import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    BadBounds, DuplicateName, ModelError, NoObjective, UnboundedSource, UnknownVar
)

logger = logging.getLogger('tlsynth.milp')

Terms = Iterable[Tuple[float, int]]


class VarKind(Enum):
    CONTINUOUS = 'continuous'
    BINARY = 'binary'


class ConstrSense(Enum):
    LE = '<='
    GE = '>='
    EQ = '='

    @classmethod
    def parse(cls, value: Union['ConstrSense', str]) -> 'ConstrSense':
        if isinstance(value, ConstrSense):
            return value
        aliases = {'<=': cls.LE, '>=': cls.GE, '=': cls.EQ, '==': cls.EQ}
        if value not in aliases:
            raise ModelError(f"unknown constraint sense {value!r}")
        return aliases[value]


class ObjSense(Enum):
    MAXIMIZE = 'Maximize'
    MINIMIZE = 'Minimize'


@dataclass(frozen=True)
class Var:
    id: int
    name: str
    kind: VarKind
    lower: float
    upper: float

    @property
    def is_binary(self) -> bool:
        return self.kind is VarKind.BINARY


@dataclass(frozen=True)
class LinConstraint:
    terms: Tuple[Tuple[float, int], ...]
    sense: ConstrSense
    rhs: float
    name: str


class AbsLink(NamedTuple):
    """Constraints and sign binary created by `MilpModel.add_abs_link`."""
    constraints: Tuple[int, ...]
    binary: int


def _num(value: float) -> str:
    text = format(float(value), '.12g')
    return '0' if text == '-0' else text


class MilpModel:
    """Mixed-integer linear program under construction."""

    def __init__(self, name: str = 'tlsynth'):
        """Initialize an empty model."""
        self.name = name
        self.vars: List[Var] = []
        self.constraints: List[LinConstraint] = []
        self._var_ids: Dict[str, int] = {}
        self._constr_names: Dict[str, int] = {}
        self.objective_sense: Optional[ObjSense] = None
        self._objective: Dict[int, float] = {}

    # construction

    def add_var(
        self,
        name: str,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: float = math.inf,
    ) -> int:
        if name in self._var_ids:
            raise DuplicateName(name)
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise BadBounds(f"variable '{name}': bounds [{lower}, {upper}] are empty")
        if lower == math.inf or upper == -math.inf:
            raise BadBounds(f"variable '{name}': bounds [{lower}, {upper}] are empty")
        if kind is VarKind.BINARY and (lower < 0 or upper > 1):
            raise BadBounds(f"binary variable '{name}' needs bounds within [0, 1]")
        var = Var(len(self.vars), name, kind, lower, upper)
        self.vars.append(var)
        self._var_ids[name] = var.id
        return var.id

    def add_binary(self, name: str) -> int:
        return self.add_var(name, VarKind.BINARY, 0.0, 1.0)

    def _coalesce(self, terms: Terms) -> Tuple[Tuple[float, int], ...]:
        merged: Dict[int, float] = {}
        for coef, var in terms:
            if not isinstance(var, (int, np.integer)) or not 0 <= var < len(self.vars):
                raise UnknownVar(var)
            coef = float(coef)
            if not math.isfinite(coef):
                raise ModelError(f"coefficient {coef} of variable {var} is not finite")
            merged[int(var)] = merged.get(int(var), 0.0) + coef
        return tuple((merged[v], v) for v in sorted(merged))

    def add_constr(
        self,
        terms: Terms,
        sense: Union[ConstrSense, str],
        rhs: float,
        name: Optional[str] = None,
    ) -> int:
        """Store sum(coef * var) <sense> rhs; repeated variables are summed."""
        coalesced = self._coalesce(terms)
        if not coalesced:
            raise ModelError("constraint has no terms")
        if not math.isfinite(float(rhs)):
            raise ModelError(f"constraint right-hand side {rhs} is not finite")
        cid = len(self.constraints)
        name = name if name is not None else f"c{cid}"
        if name in self._constr_names:
            raise DuplicateName(name)
        self.constraints.append(LinConstraint(coalesced, ConstrSense.parse(sense), float(rhs), name))
        self._constr_names[name] = cid
        return cid

    def set_objective(self, sense: ObjSense, terms: Terms = ()) -> None:
        self.objective_sense = sense
        self._objective = {}
        self.add_objective_terms(terms)

    def add_objective_terms(self, terms: Terms, weight: float = 1.0) -> None:
        """Blend weight * sum(terms) into the objective."""
        if self.objective_sense is None:
            raise NoObjective("set_objective must be called before adding objective terms")
        for coef, var in self._coalesce(terms):
            self._objective[var] = self._objective.get(var, 0.0) + weight * coef

    def add_abs_link(self, source: int, aux: int, name: Optional[str] = None) -> AbsLink:
        """Force aux == |source| exactly using one sign binary and big-M rows."""
        src = self.var(source)
        out = self.var(aux)
        if out.lower < 0:
            raise BadBounds(f"absolute-value variable '{out.name}' needs a nonnegative lower bound")
        if not (math.isfinite(src.lower) and math.isfinite(src.upper)):
            raise UnboundedSource(f"variable '{src.name}' needs finite bounds for |.|")
        big_m = max(abs(src.lower), abs(src.upper))
        prefix = name or f"abs_{out.name}"
        sign = self.add_binary(f"{prefix}_sign")
        rows = (
            self.add_constr([(1, aux), (-1, source)], ConstrSense.GE, 0.0, f"{prefix}_pos"),
            self.add_constr([(1, aux), (1, source)], ConstrSense.GE, 0.0, f"{prefix}_neg"),
            self.add_constr(
                [(1, aux), (-1, source), (2 * big_m, sign)], ConstrSense.LE, 2 * big_m,
                f"{prefix}_upos"
            ),
            self.add_constr(
                [(1, aux), (1, source), (-2 * big_m, sign)], ConstrSense.LE, 0.0, f"{prefix}_uneg"
            ),
        )
        return AbsLink(rows, sign)

    # inspection

    def var(self, var_id: int) -> Var:
        if not isinstance(var_id, (int, np.integer)) or not 0 <= var_id < len(self.vars):
            raise UnknownVar(var_id)
        return self.vars[var_id]

    def var_id(self, name: str) -> int:
        try:
            return self._var_ids[name]
        except KeyError:
            raise ModelError(f"no variable named '{name}'") from None

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def binaries(self) -> List[int]:
        return [v.id for v in self.vars if v.is_binary]

    @property
    def objective_terms(self) -> Tuple[Tuple[float, int], ...]:
        return tuple((self._objective[v], v) for v in sorted(self._objective))

    def summary(self) -> Dict[str, int]:
        return {
            'variables': self.num_vars,
            'binaries': len(self.binaries),
            'constraints': self.num_constraints,
        }

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for coef, var in self.objective_terms:
            c[var] = coef
        return c

    def bounds_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.array([v.lower for v in self.vars], dtype=float)
        upper = np.array([v.upper for v in self.vars], dtype=float)
        return lower, upper

    def constraint_matrix(self) -> Tuple[np.ndarray, List[ConstrSense], np.ndarray]:
        """Dense rows A, senses and right-hand sides."""
        matrix = np.zeros((self.num_constraints, self.num_vars))
        for row, constr in enumerate(self.constraints):
            for coef, var in constr.terms:
                matrix[row, var] = coef
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        return matrix, [c.sense for c in self.constraints], rhs

    def evaluate_objective(self, values: Sequence[float]) -> float:
        return float(self.objective_vector() @ np.asarray(values, dtype=float))

    def constraint_residuals(self, values: Sequence[float]) -> np.ndarray:
        """Violation amount of every constraint (0 when satisfied)."""
        x = np.asarray(values, dtype=float)
        if x.shape != (self.num_vars,):
            raise ModelError(f"expected {self.num_vars} values, got {x.shape}")
        if not self.constraints:
            return np.zeros(0)
        matrix, senses, rhs = self.constraint_matrix()
        lhs = matrix @ x
        residual = np.empty_like(lhs)
        for row, sense in enumerate(senses):
            if sense is ConstrSense.LE:
                residual[row] = max(0.0, lhs[row] - rhs[row])
            elif sense is ConstrSense.GE:
                residual[row] = max(0.0, rhs[row] - lhs[row])
            else:
                residual[row] = abs(lhs[row] - rhs[row])
        return residual

    def is_feasible(self, values: Sequence[float], tol: float = 1e-6) -> bool:
        """Constraints, bounds and integrality all hold within tol."""
        x = np.asarray(values, dtype=float)
        residuals = self.constraint_residuals(x)
        if residuals.size and residuals.max() > tol:
            return False
        lower, upper = self.bounds_arrays()
        if np.any(x < lower - tol) or np.any(x > upper + tol):
            return False
        binaries = self.binaries
        return not binaries or bool(np.all(np.abs(x[binaries] - np.round(x[binaries])) <= tol))

    # LP text format

    def _expression(self, terms: Sequence[Tuple[float, int]]) -> str:
        parts = []
        for index, (coef, var) in enumerate(terms):
            name = self.vars[var].name
            magnitude = abs(coef)
            body = name if magnitude == 1 else f"{_num(magnitude)} {name}"
            if index == 0:
                parts.append(f"- {body}" if coef < 0 else body)
            else:
                parts.append(f"{'-' if coef < 0 else '+'} {body}")
        return ' '.join(parts)

    def _bound_line(self, var: Var) -> Optional[str]:
        lower, upper = var.lower, var.upper
        if lower == upper:
            return f" {var.name} = {_num(lower)}"
        if var.is_binary and lower == 0 and upper == 1:
            return None
        if lower == -math.inf and upper == math.inf:
            return f" {var.name} free"
        if upper == math.inf:
            return None if lower == 0 else f" {var.name} >= {_num(lower)}"
        low = '-inf' if lower == -math.inf else _num(lower)
        return f" {low} <= {var.name} <= {_num(upper)}"

    def export_lp(self) -> str:
        """Serialize to the CPLEX LP text format."""
        if self.objective_sense is None:
            raise NoObjective("model has no objective to export")
        lines = [self.objective_sense.value]
        objective = self.objective_terms
        if objective:
            lines.append(f" obj: {self._expression(objective)}")
        else:
            lines.append(f" obj: 0 {self.vars[0].name}" if self.vars else " obj: 0")
        lines.append('Subject To')
        for constr in self.constraints:
            lines.append(
                f" {constr.name}: {self._expression(constr.terms)} "
                f"{constr.sense.value} {_num(constr.rhs)}"
            )
        bound_lines = [line for line in map(self._bound_line, self.vars) if line is not None]
        if bound_lines:
            lines.append('Bounds')
            lines.extend(bound_lines)
        binaries = [self.vars[v].name for v in self.binaries]
        if binaries:
            lines.append('Binaries')
            lines.extend(f" {name}" for name in binaries)
        lines.append('End')
        logger.debug(f"Exported LP text for model '{self.name}' ({self.summary()})")
        return '\n'.join(lines) + '\n'

    def write_lp(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.export_lp())
        logger.info(f"Wrote LP model to {path}")
