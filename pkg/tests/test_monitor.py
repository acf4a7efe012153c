import sys
import os
import math
import pytest
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tlsynth.core.errors import (
    BatchTraceError, MissingBound, TraceTooShort, UnsupportedNegation, UnsupportedOperator
)
from tlsynth.core.monitor import (
    agm_and, agm_or, agm_robustness, batch_robustness, evaluate_bool, evaluate_robustness,
    horizon, negate, pnf, robustness, wstl_robustness
)
from tlsynth.core.syntax import (
    Formula, Kind, WeightTable, parse_mtl, parse_stl, parse_wstl, print_formula
)
from tlsynth.core.traces import Trace, VarBounds
from generators import ones_like, random_formula, random_weights, trace_for


@pytest.fixture
def constant_trace():
    """Fixture for a constant trace s = 5 over 6 steps."""
    return Trace({'s': [5.0] * 6})


@pytest.fixture
def ramp_trace():
    """Fixture for s = 0, 1, ..., 5 and r = 5, 4, ..., 0."""
    return Trace({'s': np.arange(6.0), 'r': np.arange(6.0)[::-1]})


@pytest.mark.unit
class TestStructure:
    """Test horizon and normal forms."""

    @pytest.mark.parametrize("text, expected", [
        ("s>1", 0),
        ("G[0,3] s>2", 3),
        ("F[1,2] G[0,3] s>2", 5),
        ("s>1 U[2,4] F[0,1] r<0", 5),
        ("(F[0,4] s>2) && (G[2,4] s<=4)", 4),
    ])
    def test_horizon(self, text, expected):
        """Test horizons of nested formulas."""
        assert horizon(parse_stl(text)) == expected

    def test_pnf_pushes_negation(self):
        """Test negation pushed through Eventually."""
        assert print_formula(pnf(parse_stl("!(F[0,3] s>2)"))) == "G[0,3] (s <= 2)"

    def test_pnf_dualizes_boolean_operators(self):
        """Test De Morgan duals and constant flips."""
        f = pnf(parse_stl("!(s>1 && (r<2 || true))"))
        assert f == parse_stl("s<=1 || (r>=2 && false)")

    def test_double_negation(self):
        """Test that double negation cancels."""
        assert pnf(parse_stl("!!(G[0,2] s>1)")) == parse_stl("G[0,2] s>1")

    def test_pnf_keeps_until(self):
        """Test Until outside any negation."""
        f = parse_stl("(!(s>1)) U[0,2] r>0")
        assert pnf(f) == parse_stl("s<=1 U[0,2] r>0")

    def test_negate_until(self):
        """Test that negating an Until is rejected."""
        with pytest.raises(UnsupportedNegation):
            negate(parse_stl("s>1 U[0,2] r>0"))

    def test_negated_atoms(self):
        """Test negation absorbed into MTL atoms."""
        f = pnf(parse_mtl("!(F[0,2] RegionA)"))
        assert f.kind is Kind.ALWAYS
        assert f.child.predicate.negated

    def test_pnf_keeps_weights(self):
        """Test that weight tags survive normalization."""
        weights = {'p': [1.0, 2.0]}
        f = pnf(parse_wstl("!(&&^p(s>1, r>1))", weights))
        assert f.kind is Kind.OR and f.weight == 'p'


@pytest.mark.unit
class TestBooleanAndClassic:
    """Test Boolean satisfaction and classic robustness."""

    def test_always_on_constant_trace(self, constant_trace):
        """Test G[0,3] s>2 on s = 5."""
        f = parse_stl("G[0,3] s>2")
        assert robustness(f, constant_trace) == 3.0
        assert evaluate_bool(f, constant_trace)

    def test_non_strict_comparison(self, constant_trace):
        """Test that touching the threshold satisfies the predicate."""
        f = parse_stl("s > 5")
        assert evaluate_bool(f, constant_trace)
        assert robustness(f, constant_trace) == 0.0

    def test_eventually_and_always(self, ramp_trace):
        """Test window extrema on a ramp."""
        assert robustness(parse_stl("F[0,4] s>2"), ramp_trace) == 2.0
        assert robustness(parse_stl("G[1,3] s>2"), ramp_trace) == -1.0
        assert robustness(parse_stl("G[1,3] s>2"), ramp_trace, t=1) == 0.0

    def test_until(self, ramp_trace):
        """Test Until against a hand computation."""
        f = parse_stl("r>1 U[0,5] s>=3")
        # tau = 3: min(s(3) - 3, r(0..3) - 1) = min(0, 1) = 0; tau = 4: min(1, 0) = 0
        assert robustness(f, ramp_trace) == 0.0
        assert evaluate_bool(f, ramp_trace)
        g = parse_stl("r>3 U[0,5] s>=3")
        assert robustness(g, ramp_trace) == -1.0
        assert not evaluate_bool(g, ramp_trace)

    def test_constants(self, constant_trace):
        """Test infinite robustness of constants."""
        assert robustness(parse_stl("true"), constant_trace) == math.inf
        assert robustness(parse_stl("false || s>1"), constant_trace) == 4.0

    def test_atoms(self):
        """Test MTL atoms read from 0/1 columns."""
        trace = Trace({'RegionA': [0, 0, 1, 0, 0]})
        f = parse_mtl("F[0,4] RegionA")
        assert evaluate_bool(f, trace)
        assert robustness(f, trace) == 1.0
        assert robustness(parse_mtl("G[0,4] RegionA"), trace) == -1.0

    def test_trace_too_short(self, constant_trace):
        """Test traces shorter than the formula horizon."""
        with pytest.raises(TraceTooShort) as exc_info:
            robustness(parse_stl("G[0,10] s>1"), constant_trace)
        assert (exc_info.value.needed, exc_info.value.got) == (11, 6)
        with pytest.raises(TraceTooShort):
            evaluate_bool(parse_stl("G[0,3] s>1"), constant_trace, t=3)


@pytest.mark.unit
class TestAgm:
    """Test the arithmetic-geometric mean semantics."""

    def test_combinators(self):
        """Test AGM conjunction and disjunction."""
        assert agm_and([0.5, 0.5]) == pytest.approx(0.5)
        assert agm_and([0.5, -0.5]) == pytest.approx(-0.25)
        assert agm_or([-0.5, -0.5]) == pytest.approx(-0.5)
        assert agm_or([0.5, -0.5]) == pytest.approx(0.25)

    def test_normalized_predicate(self, constant_trace):
        """Test predicates scaled by the bound range."""
        bounds = VarBounds({'s': [0, 10]})
        assert agm_robustness(parse_stl("s>2"), constant_trace, 0, bounds) == pytest.approx(0.375)
        f = parse_stl("G[0,1] s>2")
        assert agm_robustness(f, constant_trace, 0, bounds) == pytest.approx(0.375)

    def test_negation_flips_sign(self, ramp_trace):
        """Test AGM of the negation on a mixed-sign formula."""
        bounds = VarBounds({'s': [0, 5], 'r': [0, 5]})
        f = parse_stl("G[0,2] s>=1 && F[1,3] r<=2")
        value = agm_robustness(f, ramp_trace, 0, bounds)
        assert value < 0
        assert agm_robustness(negate(f), ramp_trace, 0, bounds) == pytest.approx(-value)

    def test_clipped_outside_bounds(self):
        """Test values outside the declared bounds stay in [-1, 1]."""
        trace = Trace({'s': [50.0]})
        assert agm_robustness(parse_stl("s>2"), trace, 0, VarBounds({'s': [0, 10]})) == 1.0

    def test_missing_bounds(self, constant_trace):
        """Test AGM without signal bounds."""
        with pytest.raises(MissingBound):
            agm_robustness(parse_stl("s>2"), constant_trace, 0, None)
        with pytest.raises(MissingBound):
            agm_robustness(
                parse_stl("s>2"), constant_trace, 0, VarBounds({'s': [0, math.inf]})
            )

    def test_until_rejected(self, ramp_trace):
        """Test that Until has no AGM semantics."""
        bounds = VarBounds({'s': [0, 5], 'r': [0, 5]})
        with pytest.raises(UnsupportedOperator):
            agm_robustness(parse_stl("r>1 U[0,2] s>3"), ramp_trace, 0, bounds)


@pytest.mark.unit
class TestWeighted:
    """Test weighted robustness."""

    def test_weighted_conjunction(self):
        """Test min of weighted child robustness."""
        trace = Trace({'s1': [2.0], 's2': [4.0]})
        f = parse_wstl("&&^p(s1>=0, s2>=0)", {'p': [0.2, 0.8]})
        assert wstl_robustness(f, {'p': [0.2, 0.8]}, trace) == pytest.approx(0.4)

    def test_weighted_eventually(self, ramp_trace):
        """Test time weights inside an Eventually window."""
        weights = WeightTable({'w': [3.0, 1.0, 1.0]})
        f = parse_wstl("F^w[0,2] s>=1", weights)
        # scores: 3*(-1), 1*0, 1*1
        assert wstl_robustness(f, weights, ramp_trace) == 1.0

    def test_untagged_uses_unit_weights(self, ramp_trace):
        """Test implicit all-ones weights."""
        f = parse_wstl("G[0,3] r>0", {})
        assert wstl_robustness(f, {}, ramp_trace) == robustness(f, ramp_trace)


@pytest.mark.unit
class TestDispatch:
    """Test method dispatch and batch evaluation."""

    def test_methods(self, constant_trace):
        """Test dispatch by method name."""
        f = parse_stl("G[0,3] s>2")
        bounds = VarBounds({'s': [0, 10]})
        assert evaluate_robustness(f, constant_trace, 'classic') == 3.0
        assert evaluate_robustness(f, constant_trace, 'agm', bounds=bounds) == pytest.approx(0.375)
        assert evaluate_robustness(f, constant_trace, 'wstl') == 3.0
        with pytest.raises(ValueError):
            evaluate_robustness(f, constant_trace, 'spatial')

    def test_batch_matches_single_calls(self, rng):
        """Test elementwise equality with single-trace evaluation."""
        f = parse_stl("F[0,2] s>0 && G[0,3] r<2")
        traces = [trace_for(rng, f) for _ in range(10)]
        values = batch_robustness(f, traces)
        assert isinstance(values, np.ndarray)
        assert list(values) == [robustness(f, tr) for tr in traces]

    def test_batch_reports_index(self, constant_trace):
        """Test that batch failures name the offending trace."""
        f = parse_stl("G[0,3] s>2")
        with pytest.raises(BatchTraceError) as exc_info:
            batch_robustness(f, [constant_trace, constant_trace.window(0, 2)])
        assert exc_info.value.index == 1
        assert isinstance(exc_info.value.cause, TraceTooShort)


def _sign(value: float) -> int:
    return (value > 0) - (value < 0)


def _root_weighted(rng: np.random.Generator) -> tuple:
    """Formula whose only weight tag sits on the root."""
    while True:
        f = random_formula(rng, depth=3)
        if f.kind in (Kind.AND, Kind.OR, Kind.ALWAYS, Kind.EVENTUALLY):
            break
    size = len(f.children) if f.kind in (Kind.AND, Kind.OR) else f.interval[1] - f.interval[0] + 1
    tagged = Formula(f.kind, f.children, f.interval, 'root')
    return tagged, WeightTable({'root': list(rng.uniform(0.1, 3.0, size=size))})


@pytest.mark.property
class TestSoundness:
    """Test sign agreement between quantitative and Boolean semantics."""

    def test_classic_and_weighted_soundness(self, rng):
        """Test 500 random pairs for classic and weighted robustness."""
        for _ in range(500):
            f = random_formula(rng, depth=4)
            trace = trace_for(rng, f, extra=int(rng.integers(0, 3)))
            truth = evaluate_bool(f, trace)
            rho = robustness(f, trace)
            if rho != 0:
                assert (rho > 0) == truth, print_formula(f)
            tagged, weights = random_weights(rng, f)
            wrho = wstl_robustness(tagged, weights, trace)
            if wrho != 0:
                assert (wrho > 0) == truth, print_formula(tagged)

    def test_agm_soundness(self, rng):
        """Test 500 random Until-free pairs for AGM robustness."""
        bounds = VarBounds({'s': [-4, 4], 'r': [-4, 4]})
        for _ in range(500):
            f = random_formula(rng, depth=4, until_allowed=False)
            trace = trace_for(rng, f)
            value = agm_robustness(f, trace, 0, bounds)
            assert -1.0 <= value <= 1.0
            if value != 0:
                assert (value > 0) == evaluate_bool(f, trace), print_formula(f)

    def test_agm_negation_identity(self, rng):
        """Test AGM(negate(f)) = -AGM(f) on 300 random Until-free pairs."""
        bounds = VarBounds({'s': [-4, 4], 'r': [-4, 4]})
        for _ in range(300):
            f = random_formula(rng, depth=4, until_allowed=False)
            trace = trace_for(rng, f)
            value = agm_robustness(f, trace, 0, bounds)
            negated = agm_robustness(negate(f), trace, 0, bounds)
            assert negated == pytest.approx(-value, abs=1e-12), print_formula(f)

    def test_pnf_preserves_semantics(self, rng):
        """Test that normalization preserves robustness everywhere and truth away from ties."""
        for _ in range(500):
            f = random_formula(rng, depth=4)
            trace = trace_for(rng, f)
            normal = pnf(f)
            assert all(node.kind is not Kind.NOT for node in _nodes(normal))
            assert robustness(normal, trace) == robustness(f, trace)
            tie_free = trace_for(rng, f, ties=False)
            assert evaluate_bool(normal, tie_free) == evaluate_bool(f, tie_free), print_formula(f)

    def test_pnf_changes_truth_at_a_tie(self):
        """Test the non-strict flip: !(s > 2) and s <= 2 disagree only at s = 2."""
        f = parse_stl("!(s > 2)")
        assert not evaluate_bool(f, Trace({'s': [2.0]}))
        assert evaluate_bool(pnf(f), Trace({'s': [2.0]}))
        assert robustness(pnf(f), Trace({'s': [2.0]})) == robustness(f, Trace({'s': [2.0]}))
        for value in (1.5, 2.5):
            trace = Trace({'s': [value]})
            assert evaluate_bool(pnf(f), trace) == evaluate_bool(f, trace)

    def test_unit_weights_reduce_to_classic(self, rng):
        """Test wSTL with all-ones tables on 200 random pairs."""
        for _ in range(200):
            f, weights = random_weights(rng, random_formula(rng, depth=4))
            trace = trace_for(rng, f)
            assert wstl_robustness(f, ones_like(weights), trace) == robustness(f, trace)

    @pytest.mark.parametrize("factor", [0.25, 0.5, 2.0, 8.0])
    def test_weight_scaling(self, rng, factor):
        """Test that scaling a weight layer scales robustness by the same factor."""
        for _ in range(50):
            f, weights = _root_weighted(rng)
            trace = trace_for(rng, f)
            base = wstl_robustness(f, weights, trace)
            assert wstl_robustness(f, weights.scaled(factor), trace) == factor * base


def _nodes(f: Formula):
    yield f
    for child in f.children:
        yield from _nodes(child)


@pytest.mark.property
class TestNegationProperties:
    """Test negation on generated Until-free formulas."""

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_negate_flips_truth_and_robustness(self, seed):
        """Test that negate(f) is the Boolean and quantitative complement."""
        rng = np.random.default_rng(seed)
        f = random_formula(rng, depth=3, until_allowed=False)
        trace = trace_for(rng, f)
        assert robustness(negate(f), trace) == -robustness(f, trace)
        tie_free = trace_for(rng, f, ties=False)
        assert evaluate_bool(negate(f), tie_free) == (not evaluate_bool(f, tie_free))
