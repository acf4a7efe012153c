import sys
import os
import math
import pytest
import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tlsynth.core.errors import (
    BadBounds, DuplicateName, ModelError, NoObjective, UnboundedSource, UnknownVar
)
from tlsynth.core.encode import encode_stl
from tlsynth.core.milp import ConstrSense, MilpModel, ObjSense, VarKind
from tlsynth.core.syntax import parse_stl
from tlsynth.core.traces import VarBounds


@pytest.fixture
def model():
    """Fixture for a model touching every bound and sense form."""
    m = MilpModel('demo')
    x = m.add_var('x', VarKind.CONTINUOUS, 0, 4)
    y = m.add_var('y', VarKind.CONTINUOUS, -math.inf, math.inf)
    b = m.add_binary('b')
    z = m.add_var('z', VarKind.CONTINUOUS, 2)
    m.add_var('w', VarKind.CONTINUOUS, 1, 1)
    m.add_constr([(1, x), (2, y), (-1, b)], '<=', 5, 'cap')
    m.add_constr([(-3, x), (1, z)], ConstrSense.GE, -1.5)
    m.set_objective(ObjSense.MAXIMIZE, [(1, x), (-0.5, y)])
    return m


@pytest.mark.unit
class TestModelConstruction:
    """Test variables, constraints and objectives."""

    def test_ids_and_summary(self, model):
        """Test dense ids and the size summary."""
        assert [v.name for v in model.vars] == ['x', 'y', 'b', 'z', 'w']
        assert model.var_id('z') == 3
        assert model.binaries == [2]
        assert model.summary() == {'variables': 5, 'binaries': 1, 'constraints': 2}

    def test_default_constraint_names(self, model):
        """Test c<id> names for unnamed constraints."""
        assert [c.name for c in model.constraints] == ['cap', 'c1']
        with pytest.raises(DuplicateName):
            model.add_constr([(1, 0)], '<=', 1, 'c1')

    def test_duplicate_variable(self, model):
        """Test reuse of a variable name."""
        with pytest.raises(DuplicateName):
            model.add_var('x')

    @pytest.mark.parametrize("kind, lower, upper", [
        (VarKind.CONTINUOUS, 3, 1),
        (VarKind.CONTINUOUS, math.inf, math.inf),
        (VarKind.BINARY, 0, 2),
        (VarKind.CONTINUOUS, float('nan'), 1),
    ])
    def test_bad_bounds(self, kind, lower, upper):
        """Test empty or out-of-range bounds."""
        with pytest.raises(BadBounds):
            MilpModel().add_var('v', kind, lower, upper)

    def test_repeated_terms_are_summed(self):
        """Test coalescing of repeated variables."""
        m = MilpModel()
        x = m.add_var('x')
        y = m.add_var('y')
        cid = m.add_constr([(2, y), (1, x), (3, y)], '>=', 1)
        assert m.constraints[cid].terms == ((1.0, x), (5.0, y))

    def test_invalid_constraints(self, model):
        """Test unknown variables, empty rows and bad senses."""
        with pytest.raises(UnknownVar):
            model.add_constr([(1, 99)], '<=', 1)
        with pytest.raises(ModelError):
            model.add_constr([], '<=', 1)
        with pytest.raises(ModelError):
            model.add_constr([(1, 0)], '<', 1)
        with pytest.raises(ModelError):
            model.add_constr([(1, 0)], '<=', math.inf)

    def test_blended_objective(self, model):
        """Test weighted objective accumulation."""
        model.add_objective_terms([(2, 0), (1, 3)], weight=-0.5)
        assert model.objective_terms == ((0.0, 0), (-0.5, 1), (-0.5, 3))
        assert model.evaluate_objective([1, 2, 0, 4, 1]) == -3.0

    def test_objective_terms_need_a_sense(self):
        """Test adding objective terms before set_objective."""
        m = MilpModel()
        x = m.add_var('x')
        with pytest.raises(NoObjective):
            m.add_objective_terms([(1, x)])


@pytest.mark.unit
class TestAbsLink:
    """Test the exact absolute-value link."""

    @pytest.fixture
    def linked(self):
        """Fixture for aux = |x| with x in [-3, 2]."""
        m = MilpModel()
        x = m.add_var('x', VarKind.CONTINUOUS, -3, 2)
        a = m.add_var('a', VarKind.CONTINUOUS, 0, 3)
        link = m.add_abs_link(x, a)
        return m, link

    def test_structure(self, linked):
        """Test the four rows and the sign binary."""
        m, link = linked
        assert len(link.constraints) == 4
        assert m.var(link.binary).name == 'abs_a_sign'
        assert [m.constraints[c].name for c in link.constraints] == [
            'abs_a_pos', 'abs_a_neg', 'abs_a_upos', 'abs_a_uneg'
        ]

    def test_only_exact_magnitude_is_feasible(self, linked):
        """Test that aux equals |x| for some sign choice and nothing else."""
        m, link = linked
        for x in (-3.0, -1.0, 0.0, 2.0):
            for a in np.linspace(0, 3, 13):
                feasible = any(m.is_feasible([x, a, s]) for s in (0.0, 1.0))
                assert feasible == math.isclose(a, abs(x)), (x, a)

    def test_requires_finite_source(self):
        """Test links on an unbounded source."""
        m = MilpModel()
        x = m.add_var('x', VarKind.CONTINUOUS, -math.inf, 1)
        a = m.add_var('a')
        with pytest.raises(UnboundedSource):
            m.add_abs_link(x, a)

    def test_requires_nonnegative_aux(self):
        """Test links into a variable that may go negative."""
        m = MilpModel()
        x = m.add_var('x', VarKind.CONTINUOUS, -1, 1)
        a = m.add_var('a', VarKind.CONTINUOUS, -1, 1)
        with pytest.raises(BadBounds):
            m.add_abs_link(x, a)


@pytest.mark.unit
class TestChecking:
    """Test independent residual checks."""

    def test_residuals(self, model):
        """Test violation amounts per constraint."""
        residuals = model.constraint_residuals([4, 1, 0, 2, 1])
        assert list(residuals) == [1.0, 8.5]

    def test_is_feasible(self, model):
        """Test bounds, rows and integrality together."""
        assert model.is_feasible([1, 0, 0, 2, 1])
        assert not model.is_feasible([1, 0, 0.5, 2, 1])
        assert not model.is_feasible([5, 0, 0, 20, 1])

    def test_wrong_length(self, model):
        """Test value vectors of the wrong size."""
        with pytest.raises(ModelError):
            model.constraint_residuals([1, 2])


@pytest.mark.unit
class TestLpExport:
    """Test the LP text format."""

    def test_full_export(self, model):
        """Test every section of the export."""
        assert model.export_lp() == "\n".join([
            "Maximize",
            " obj: x - 0.5 y",
            "Subject To",
            " cap: x + 2 y - b <= 5",
            " c1: - 3 x + z >= -1.5",
            "Bounds",
            " 0 <= x <= 4",
            " y free",
            " z >= 2",
            " w = 1",
            "Binaries",
            " b",
            "End",
        ]) + "\n"

    def test_empty_objective(self):
        """Test the placeholder objective line."""
        m = MilpModel()
        x = m.add_var('x', VarKind.CONTINUOUS, -math.inf, 3)
        m.add_constr([(1, x)], '=', 2, 'fix')
        m.set_objective(ObjSense.MINIMIZE)
        assert m.export_lp().splitlines() == [
            "Minimize", " obj: 0 x", "Subject To", " fix: x = 2", "Bounds",
            " -inf <= x <= 3", "End",
        ]

    def test_export_without_objective(self):
        """Test export before an objective is set."""
        m = MilpModel()
        m.add_var('x')
        with pytest.raises(NoObjective):
            m.export_lp()

    def test_write_lp(self, model, tmp_path):
        """Test writing the export to disk."""
        path = tmp_path / 'model.lp'
        model.write_lp(path)
        assert path.read_text() == model.export_lp()

    def test_identical_models_export_identical_bytes(self):
        """Test that two encodings of the same formula give the same LP text."""
        bounds = VarBounds({'s': [0, 10], 'r': [-5, 5]})

        def build():
            f = parse_stl("(F[0,3] s>2) && (s>1 U[0,2] r<=0)")
            return encode_stl(f, bounds).model.export_lp().encode()

        first, second = build(), build()
        assert first == second
        assert first.endswith(b"End")
