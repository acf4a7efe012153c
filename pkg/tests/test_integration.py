import sys
import os
import dataclasses
import pytest
import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tlsynth.core.config import BnbOptions, EncoderConfig
from tlsynth.core.monitor import evaluate_bool, wstl_robustness
from tlsynth.core.solver import SolveStatus
from tlsynth.core.synthesis import CostWeights, check_result
from tlsynth.core.system_config import load_system_config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


@pytest.mark.integration
class TestWorkedExamples:
    """End-to-end synthesis on the shipped problem files.

    These solve the full examples with the built-in solver and take tens of
    seconds. They are marked with 'integration' so they can be skipped in
    regular test runs.

    Run with: pytest -m integration
    """

    @pytest.fixture(scope="class")
    def options(self):
        """Solver options independent of the environment."""
        return BnbOptions(int_tol=1e-6, gap=1e-6, node_limit=200000, time_limit=None,
                          rounding=True)

    @pytest.fixture(scope="class")
    def encoder(self):
        """Encoder constants independent of the environment."""
        return EncoderConfig(delta=1e-4, big_m_margin=1.0)

    @pytest.fixture(scope="class")
    def stl_run(self, options, encoder):
        """Solve the two-signal STL trajectory problem once."""
        config = load_system_config(os.path.join(CONFIG_DIR, 'example1_stl.json'))
        problem = config.build_problem(encoder)
        return problem, problem.solve(options)

    @pytest.fixture(scope="class")
    def control_file(self):
        """Load the double-integrator control problem."""
        return load_system_config(os.path.join(CONFIG_DIR, 'example2_control.json'))

    @pytest.fixture(scope="class")
    def robustness_only(self, control_file, options, encoder):
        """Control run with lambda=1 and no effort penalty."""
        config = dataclasses.replace(control_file, costs=CostWeights(lam=1.0))
        return config.build_problem(encoder).solve(options)

    @pytest.fixture(scope="class")
    def penalized(self, control_file, options, encoder):
        """Control run with the shipped effort penalties."""
        return control_file.build_problem(encoder).solve(options)

    def test_stl_trajectory(self, stl_run):
        """Test optimum, trace length and both conjuncts."""
        problem, result = stl_run
        assert result.status is SolveStatus.OPTIMAL
        assert len(result.states) == 11
        assert result.states.names == ('s1', 's2')
        assert result.rho_milp == pytest.approx(3.0, abs=1e-6)
        assert result.rho_monitor >= 0.0
        assert result.rho_monitor >= result.rho_milp - 1e-6
        for conjunct in problem.formula.children:
            assert evaluate_bool(conjunct, result.states)
        assert result.runtime < 30.0

    def test_weighted_trajectory(self, options, encoder):
        """Test the weighted optimum against its own monitor."""
        config = load_system_config(os.path.join(CONFIG_DIR, 'example1_wstl.json'))
        problem = config.build_problem(encoder)
        result = problem.solve(options)
        assert result.status is SolveStatus.OPTIMAL
        assert result.rho_milp >= 0.0
        assert wstl_robustness(problem.formula, config.weights, result.states) == pytest.approx(
            result.rho_milp, abs=1e-6
        )
        assert check_result(result, problem.formula).ok
        assert result.runtime < 60.0

    def test_control_maximizing_robustness(self, robustness_only, control_file):
        """Test satisfaction and dynamics without effort penalties."""
        result = robustness_only
        assert result.status is SolveStatus.OPTIMAL
        report = check_result(result, result.formula, control_file.system)
        assert report.ok
        assert report.satisfied
        assert report.monitor_rho >= 0.0
        assert report.dynamics_residual <= 1e-6
        assert result.rho_monitor >= result.rho_milp - 1e-6
        assert result.trace().names == ('s1', 's2', 'u1', 'u2')

    def test_control_with_effort_penalty(self, penalized, robustness_only, control_file):
        """Test that penalizing effort keeps satisfaction and spends no more input."""
        report = check_result(penalized, penalized.formula, control_file.system)
        assert report.ok and report.satisfied

        def effort(result):
            return sum(np.sum(np.abs(result.inputs[n])) for n in result.inputs.names)

        assert effort(penalized) <= effort(robustness_only) + 1e-6
        assert penalized.runtime < 60.0

    def test_effort_is_monotone_in_beta(self, control_file, options, encoder):
        """Test that raising beta never raises the optimal input effort."""
        efforts = []
        for beta in (0.05, 0.2, 1.0):
            config = dataclasses.replace(
                control_file, costs=CostWeights(lam=1.0, beta=[beta, beta])
            )
            result = config.build_problem(encoder).solve(options)
            assert result.status is SolveStatus.OPTIMAL
            efforts.append(sum(np.sum(np.abs(result.inputs[n])) for n in result.inputs.names))
        assert all(b <= a + 1e-4 for a, b in zip(efforts, efforts[1:]))
