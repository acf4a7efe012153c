from .config import AppConfig, BnbOptions, EncoderConfig, LoggingConfig
from .errors import (
    ConfigError, ModelError, SemanticError, SolverError, SyntaxFailure, TemporalLogicError
)
from .syntax import (
    Formula, Kind, Logic, WeightTable, format_tree, parse, parse_mtl, parse_stl, parse_wstl,
    print_formula
)
from .traces import Trace, VarBounds
from .monitor import (
    agm_robustness, batch_robustness, evaluate_bool, evaluate_robustness, horizon, negate, pnf,
    robustness, wstl_robustness
)
from .milp import ConstrSense, MilpModel, ObjSense, VarKind
from .solver import Solution, SolveStatus, solve_lp, solve_milp
from .encode import EncodedSpec, encode_mtl, encode_stl, encode_wstl
from .synthesis import (
    CostWeights, LtiSystem, Saturation, SynthesisProblem, SynthesisResult, check_result,
    synth_control, synth_trajectory
)
from .system_config import SystemConfig, load_system_config

__all__ = [
    # Configuration
    'AppConfig', 'BnbOptions', 'EncoderConfig', 'LoggingConfig',
    'SystemConfig', 'load_system_config',

    # Errors
    'TemporalLogicError', 'SyntaxFailure', 'SemanticError', 'ModelError', 'SolverError',
    'ConfigError',

    # Formulas
    'Formula', 'Kind', 'Logic', 'WeightTable', 'parse', 'parse_stl', 'parse_mtl', 'parse_wstl',
    'print_formula', 'format_tree',

    # Monitoring
    'Trace', 'VarBounds', 'horizon', 'pnf', 'negate', 'evaluate_bool', 'robustness',
    'agm_robustness', 'wstl_robustness', 'evaluate_robustness', 'batch_robustness',

    # MILP
    'MilpModel', 'VarKind', 'ConstrSense', 'ObjSense', 'Solution', 'SolveStatus',
    'solve_lp', 'solve_milp',

    # Encoding and synthesis
    'EncodedSpec', 'encode_stl', 'encode_mtl', 'encode_wstl',
    'LtiSystem', 'Saturation', 'CostWeights', 'SynthesisProblem', 'SynthesisResult',
    'synth_trajectory', 'synth_control', 'check_result',
]
