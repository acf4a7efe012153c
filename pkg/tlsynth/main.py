import sys
import json
import logging
import argparse
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from tlsynth.core import (
    AppConfig, Logic, SyntaxFailure, TemporalLogicError, Trace, VarBounds, WeightTable,
    batch_robustness, check_result, evaluate_robustness, format_tree, horizon,
    load_system_config, negate, parse, pnf, print_formula
)
from tlsynth.core.syntax import format_number
from tlsynth.logging_config import LOG_LEVELS, configure_logging

EXIT_OK = 0
EXIT_NO_SOLUTION = 3
EXIT_IO = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--log-level',
        choices=list(LOG_LEVELS),
        default=None,
        help='Set logging level (default: LOG_LEVEL from the environment)'
    )


def _add_formula_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--logic',
        choices=[logic.value for logic in Logic],
        default=Logic.STL.value,
        help='Specification logic'
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--spec', help='Specification text')
    source.add_argument('--file', help='File holding the specification text')
    parser.add_argument('--weights', help='JSON file mapping weight names to vectors (wSTL)')


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='tlsynth', description='Temporal logic parsing, monitoring and synthesis'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    parse_cmd = commands.add_parser('parse', help='Print the formula tree')
    _add_formula_source(parse_cmd)
    _add_common(parse_cmd)

    analyze = commands.add_parser('analyze', help='Horizon, normal form or negation')
    _add_formula_source(analyze)
    query = analyze.add_mutually_exclusive_group(required=True)
    query.add_argument('--horizon', action='store_true', help='Print the formula horizon')
    query.add_argument('--pnf', action='store_true', help='Print the positive normal form')
    query.add_argument('--negate', action='store_true', help='Print the negation in normal form')
    _add_common(analyze)

    robust = commands.add_parser('robustness', help='Evaluate robustness on traces')
    _add_formula_source(robust)
    traces = robust.add_mutually_exclusive_group(required=True)
    traces.add_argument('--trace', help='Trace CSV file')
    traces.add_argument('--batch', help='Directory of trace CSV files, evaluated in name order')
    robust.add_argument(
        '--method',
        choices=['classic', 'agm', 'wstl'],
        default=None,
        help='Robustness semantics (default: wstl for wSTL formulas, classic otherwise)'
    )
    robust.add_argument('--bounds', help='JSON file of signal bounds, required for agm')
    robust.add_argument('--time', type=int, default=0, help='Evaluation step')
    _add_common(robust)

    synth = commands.add_parser('synth', help='Synthesize a trajectory from a problem file')
    synth.add_argument('--config', required=True, help='Problem JSON file')
    synth.add_argument('--out', required=True, help='Output trace CSV file')
    synth.add_argument('--export-lp', help='Write the model in LP format before solving')
    synth.add_argument('--gap', type=float, help='Override relative optimality gap')
    synth.add_argument('--nodes', type=int, help='Override branch-and-bound node limit')
    synth.add_argument('--time-limit', type=float, help='Override solver time limit (seconds)')
    _add_common(synth)

    return parser.parse_args(argv)


def _read_json(path: str):
    with open(path, encoding='utf-8') as handle:
        return json.load(handle)


def caret_report(text: str, span) -> str:
    """Offending line of the specification with a caret under the span."""
    start, end = span
    line_start = text.rfind('\n', 0, start) + 1
    line_end = text.find('\n', start)
    line = text[line_start:] if line_end < 0 else text[line_start:line_end]
    width = max(1, min(end, line_start + len(line)) - start)
    return f"  {line}\n  {' ' * (start - line_start)}{'^' * width}"


class TemporalLogicService:
    """Runs one CLI command and maps failures to exit codes."""

    def __init__(self, config: Optional[AppConfig] = None):
        """Initialize the service."""
        self.config = config or AppConfig()
        self.logger = logging.getLogger('tlsynth.cli')
        self.spec_text: Optional[str] = None

    # inputs

    def read_spec(self, args: argparse.Namespace) -> str:
        if args.spec is not None:
            self.spec_text = args.spec
        else:
            self.spec_text = Path(args.file).read_text(encoding='utf-8').strip()
        return self.spec_text

    def load_formula(self, args: argparse.Namespace):
        weights = WeightTable(_read_json(args.weights)) if args.weights else WeightTable()
        return parse(self.read_spec(args), Logic(args.logic), weights), weights

    # commands

    def run_parse(self, args: argparse.Namespace) -> int:
        f, _ = self.load_formula(args)
        print(format_tree(f))
        return EXIT_OK

    def run_analyze(self, args: argparse.Namespace) -> int:
        f, _ = self.load_formula(args)
        if args.horizon:
            print(horizon(f))
        elif args.pnf:
            print(print_formula(pnf(f)))
        else:
            print(print_formula(negate(f)))
        return EXIT_OK

    def run_robustness(self, args: argparse.Namespace) -> int:
        f, weights = self.load_formula(args)
        method = args.method or ('wstl' if args.logic == Logic.WSTL.value else 'classic')
        bounds = VarBounds(_read_json(args.bounds)) if args.bounds else None
        if args.trace:
            value = evaluate_robustness(
                f, Trace.from_csv(args.trace), method, args.time, bounds, weights
            )
            print(format_number(value))
            return EXIT_OK
        files = sorted(Path(args.batch).glob('*.csv'))
        if not files:
            raise FileNotFoundError(f"no .csv files in {args.batch}")
        values = batch_robustness(
            f, [Trace.from_csv(path) for path in files], method, bounds, weights, args.time
        )
        self.logger.info(f"Evaluated {len(values)} traces from {args.batch}")
        for value in values:
            print(format_number(value))
        return EXIT_OK

    def run_synth(self, args: argparse.Namespace) -> int:
        problem_file = load_system_config(args.config)
        self.spec_text = problem_file.formula_text
        options = self.config.solver
        overrides = {
            'gap': args.gap, 'node_limit': args.nodes, 'time_limit': args.time_limit
        }
        options = replace(options, **{k: v for k, v in overrides.items() if v is not None})

        problem = problem_file.build_problem(self.config.encoder)
        if args.export_lp:
            problem.model.write_lp(args.export_lp)
        result = problem.solve(options)

        print(f"status: {result.status.value}")
        if not result.feasible:
            return EXIT_NO_SOLUTION
        if result.rho_milp is not None:
            print(f"rho_milp: {format_number(result.rho_milp)}")
        print(f"rho_monitor: {format_number(result.rho_monitor)}")
        print(f"objective: {format_number(result.objective)}")
        report = check_result(result, problem.formula, problem.system)
        for violation in report.violations:
            self.logger.warning(f"Result check: {violation}")
        result.trace().to_csv(args.out)
        self.logger.info(f"Wrote trace to {args.out}")
        return EXIT_OK

    def run(self, args: argparse.Namespace) -> int:
        """Run the selected command, returning the process exit code."""
        handler = getattr(self, f"run_{args.command}")
        try:
            return handler(args)
        except SyntaxFailure as e:
            self.logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            if self.spec_text is not None:
                print(caret_report(self.spec_text, e.span), file=sys.stderr)
            return e.exit_code
        except TemporalLogicError as e:
            self.logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
            self.logger.error(f"{args.command} failed to read input: {e}")
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point."""
    load_dotenv()
    args = parse_arguments(argv)

    try:
        config = AppConfig()
    except TemporalLogicError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)

    # Configure logging
    level_name = (args.log_level or config.logging.level).lower()
    configure_logging(LOG_LEVELS.get(level_name, logging.WARNING), config.logging.log_dir)

    logger = logging.getLogger('tlsynth')
    logger.debug(f"Running command '{args.command}'")

    service = TemporalLogicService(config)
    sys.exit(service.run(args))


if __name__ == "__main__":
    main()
