"""Tests for rule bases, the large-scale system and grade evaluation."""

import numpy as np
import pytest

from it2synth.errors import DegenerateGradeError, ModelInputError
from it2synth.fuzzy.membership import IT2Set, MembershipFn
from it2synth.fuzzy.model import (
    ConstantRealization,
    ControllerRuleBase,
    LargeScaleSystem,
    PlantRule,
    Subsystem,
    combined_grade_bounds,
    combined_grades,
    controller_grades,
    firing_bounds,
    grade_bounds,
    plant_grades,
)
from it2synth.fuzzy.validator import ModelValidator, controllability_rank
from tests.factories import random_system


@pytest.fixture
def bump():
    return IT2Set(
        lower=MembershipFn.triangular(-1.0, 0.0, 1.0, height=0.5),
        upper=MembershipFn.triangular(-1.0, 0.0, 1.0),
    )


def _single(bump, coupling=None):
    rule = PlantRule(
        A=[[0.0, 1.0], [1.0, 0.0]],
        B=[0.0, 1.0],
        interconnections=coupling or {},
        antecedents=((0, bump),),
    )
    return Subsystem(index=0, rules=[rule])


class TestPlantRule:
    """Test local model construction."""

    def test_defaults_fill_zero_channels(self):
        rule = PlantRule(A=np.eye(2), B=[1.0, 0.0])
        assert rule.B.shape == (2, 1)
        assert rule.D1.shape == (2, 1)
        assert rule.C.shape == (1, 2)
        assert rule.D2.shape == (1, 1)
        assert not np.any(rule.D1)

    def test_non_square_a(self):
        with pytest.raises(ModelInputError, match="square"):
            PlantRule(A=np.ones((2, 3)), B=np.ones((2, 1)))

    def test_b_row_mismatch(self):
        with pytest.raises(ModelInputError, match="B must have 2 rows"):
            PlantRule(A=np.eye(2), B=np.ones((3, 1)))

    def test_non_finite_entries(self):
        with pytest.raises(ModelInputError, match="non-finite"):
            PlantRule(A=[[np.nan, 0.0], [0.0, 1.0]], B=[0.0, 1.0])

    def test_antecedent_index_checked(self, bump):
        with pytest.raises(ModelInputError):
            PlantRule(A=np.eye(2), B=[0.0, 1.0], antecedents=((2, bump),))


class TestLargeScaleSystem:
    """Test system-level checks."""

    def test_column_shorthand_expanded(self, bump):
        sub0 = _single(bump, {1: [0.0, 0.25]})
        sub1 = Subsystem(index=1, rules=[PlantRule(A=np.eye(2), B=[0.0, 1.0], antecedents=((0, bump),))])
        ctrl = ControllerRuleBase(rules=[((0, bump),)])
        system = LargeScaleSystem(subsystems=[sub0, sub1], controllers=[ctrl, ctrl])
        np.testing.assert_allclose(
            system.subsystems[0].rules[0].interconnections[1], [[0.0, 0.0], [0.25, 0.0]]
        )

    def test_missing_neighbour(self, bump):
        sub0 = _single(bump, {3: np.eye(2)})
        with pytest.raises(ModelInputError, match="missing subsystem 3"):
            LargeScaleSystem(subsystems=[sub0], controllers=[ControllerRuleBase(rules=[((0, bump),)])])

    def test_self_interconnection(self, bump):
        with pytest.raises(ModelInputError, match="differ from own index"):
            _single(bump, {0: np.eye(2)})

    def test_controller_count(self, bump):
        with pytest.raises(ModelInputError, match="one controller rule base per subsystem"):
            LargeScaleSystem(subsystems=[_single(bump)], controllers=[])

    def test_rule_dimensions_agree(self, bump):
        r1 = PlantRule(A=np.eye(2), B=[0.0, 1.0])
        r2 = PlantRule(A=np.eye(3), B=[0.0, 0.0, 1.0])
        with pytest.raises(ModelInputError, match="differ from rule 0"):
            Subsystem(index=0, rules=[r1, r2])


class TestGrades:
    """Test firing strengths, type reduction and envelopes."""

    def test_firing_bounds(self, bump):
        sub = _single(bump)
        lo, hi = firing_bounds(sub, 0, [0.5, 3.0])
        assert lo == pytest.approx(0.25)
        assert hi == pytest.approx(0.5)

    def test_firing_bounds_bad_rule(self, bump):
        with pytest.raises(ModelInputError):
            firing_bounds(_single(bump), 1, [0.0, 0.0])

    def test_wrong_state_dimension(self, bump):
        with pytest.raises(ModelInputError, match="expected state dimension 2"):
            plant_grades(_single(bump), [0.0, 0.0, 0.0])

    def test_controller_wrong_state_dimension(self, bump):
        rb = ControllerRuleBase(rules=[((1, bump),)])
        with pytest.raises(ModelInputError, match="expected state dimension 2"):
            controller_grades(rb, [0.0, 0.0, 0.0], 2)
        with pytest.raises(ModelInputError, match="single state"):
            controller_grades(rb, [[0.0, 0.0], [0.1, 0.0]], 2)
        with pytest.raises(ModelInputError, match="state component 1"):
            controller_grades(rb, [0.0])
        assert controller_grades(rb, [3.0, 0.0], 2) == pytest.approx([1.0])

    def test_degenerate_grade(self, bump):
        with pytest.raises(DegenerateGradeError):
            plant_grades(_single(bump), [5.0, 0.0])

    def test_constant_realization(self, pendulum_system):
        sub = pendulum_system.subsystems[0]
        sub_lo = Subsystem(index=0, rules=sub.rules, alpha_realization=ConstantRealization.uniform(2, 1.0))
        x = np.array([0.4, 0.0])
        lower = np.array([rule.antecedents[0][1].lower(x[0]) for rule in sub.rules])
        np.testing.assert_allclose(plant_grades(sub_lo, x), lower / lower.sum())

    def test_bad_realization_shape(self, pendulum_system):
        sub = pendulum_system.subsystems[0]
        bad = Subsystem(index=0, rules=sub.rules, alpha_realization=lambda x: np.ones((3, 2)))
        with pytest.raises(ModelInputError, match="shape"):
            plant_grades(bad, [0.1, 0.0])

    def test_grade_normalisation_pendulum(self, pendulum_system):
        rng = np.random.default_rng(7)
        r = np.deg2rad(88.0)
        for x in np.column_stack([rng.uniform(-r, r, 1000), rng.uniform(-4, 4, 1000)]):
            assert plant_grades(pendulum_system.subsystems[0], x).sum() == pytest.approx(1.0, abs=1e-9)
            assert controller_grades(pendulum_system.controllers[1], x).sum() == pytest.approx(1.0, abs=1e-9)
            assert combined_grades(pendulum_system, 1, x).sum() == pytest.approx(1.0, abs=1e-9)

    def test_grade_normalisation_random_systems(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            system = random_system(rng)
            for x in rng.uniform(-2, 2, size=(50, 2)):
                for i in range(system.N):
                    h = combined_grades(system, i, x)
                    assert h.shape == (2, 2)
                    assert np.all(h >= 0.0)
                    assert h.sum() == pytest.approx(1.0, abs=1e-9)

    def test_envelope_contains_every_realization(self, pendulum_system):
        rng = np.random.default_rng(3)
        sub = pendulum_system.subsystems[0]
        for x in rng.uniform(-1.5, 1.5, size=(200, 2)):
            weights = rng.uniform(size=(2,))
            realised = Subsystem(
                index=0,
                rules=sub.rules,
                alpha_realization=ConstantRealization(tuple((w, 1.0 - w) for w in weights)),
            )
            lo, hi = grade_bounds(sub, x)
            w = plant_grades(realised, x)
            assert np.all(lo - 1e-12 <= w)
            assert np.all(w <= hi + 1e-12)

    def test_combined_envelope_contains_grades(self, pendulum_system):
        rng = np.random.default_rng(5)
        for x in rng.uniform(-1.5, 1.5, size=(100, 2)):
            lo, hi = combined_grade_bounds(pendulum_system, 0, x)
            h = combined_grades(pendulum_system, 0, x)
            assert np.all(lo - 1e-12 <= h) and np.all(h <= hi + 1e-12)


class TestModelValidator:
    """Test model validation reports."""

    def test_pendulum_valid(self, pendulum_system):
        r = np.deg2rad(88.0)
        boxes = [(np.array([-r, -4.0]), np.array([r, 4.0]))] * 2
        result = ModelValidator(verbose=False).validate(pendulum_system, boxes=boxes)
        assert result.is_valid
        assert not result.has_errors()
        assert any("unstable" in note for note in result.notes)

    def test_coverage_gap_reported(self, bump):
        ctrl = ControllerRuleBase(rules=[((0, bump),)])
        system = LargeScaleSystem(subsystems=[_single(bump)], controllers=[ctrl])
        result = ModelValidator(verbose=False).validate(
            system, boxes=[(np.array([-3.0, -1.0]), np.array([3.0, 1.0]))]
        )
        assert not result.is_valid
        assert any("no plant rule fires" in e for e in result.errors)

    def test_uncontrollable_warning(self, bump):
        rule = PlantRule(A=np.eye(2), B=[1.0, 0.0], antecedents=((0, bump),))
        system = LargeScaleSystem(
            subsystems=[Subsystem(index=0, rules=[rule])],
            controllers=[ControllerRuleBase(rules=[((0, bump),)])],
        )
        result = ModelValidator(verbose=False).validate(system)
        assert result.has_warnings()
        assert controllability_rank(rule.A, rule.B) == 1
