"""Tests for state-box and FOU partitioning."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from it2synth.bench.pendulum import build_system, default_partition_box
from it2synth.errors import PartitionError
from it2synth.fuzzy.model import (
    ControllerRuleBase,
    LargeScaleSystem,
    PlantRule,
    Subsystem,
    combined_grade_bounds,
    combined_grades,
)
from it2synth.partition.fou import (
    AUDIT_TOL,
    FouPartition,
    PartitionBuilder,
    StateBox,
    active_subfou,
    audit_envelope,
    build_partition,
    interp_weights,
    load_partition,
    reconstruct_bounds,
    save_partition,
)

R = np.deg2rad(88.0)


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def box():
    return StateBox((-1.0, -2.0), (1.0, 2.0), (4, 2))


def _inside(rng, count):
    return np.column_stack([rng.uniform(-R, R, count), rng.uniform(-4.0, 4.0, count)])


class TestStateBox:
    """Test box geometry and cell lookup."""

    def test_counts_broadcast(self):
        b = StateBox((0.0, 0.0), (1.0, 1.0), (3,))
        assert b.counts == (3, 3)
        assert b.q == 9

    def test_default_single_cell(self):
        assert StateBox((0.0,), (1.0,)).q == 1

    def test_empty_dimension_rejected(self):
        with pytest.raises(PartitionError, match="must be <"):
            StateBox((0.0, 1.0), (1.0, 1.0))

    def test_bad_counts_rejected(self):
        with pytest.raises(PartitionError, match="counts"):
            StateBox((0.0,), (1.0,), (0,))

    def test_locate(self, box):
        np.testing.assert_array_equal(box.locate([-0.9, 1.9]), [[0, 1]])
        np.testing.assert_array_equal(box.locate([0.2, -0.5]), [[2, 0]])

    def test_shared_face_goes_to_upper_cell_except_box_face(self, box):
        # the face at x0 = -0.5 is the lower face of cell 1
        np.testing.assert_array_equal(box.locate([-0.5, 0.0])[0, 0], 1)
        np.testing.assert_array_equal(box.locate([1.0, 2.0]), [[3, 1]])

    def test_outside_raises(self, box):
        with pytest.raises(PartitionError, match="outside the state box"):
            box.locate([1.5, 0.0])

    def test_cell_bounds_pin_outer_face(self, box):
        lo, hi = box.cell_bounds(box.flat((3, 1)))
        np.testing.assert_allclose(lo, [0.5, 0.0])
        assert tuple(hi) == (1.0, 2.0)

    def test_flat_unflat(self, box):
        for k in range(box.q):
            assert box.flat(box.unflat(k)) == k

    def test_lattice_includes_corners(self, box):
        pts = box.lattice(0, 3)
        assert pts.shape == (9, 2)
        lo, hi = box.cell_bounds(0)
        assert any(np.allclose(p, lo) for p in pts)
        assert any(np.allclose(p, hi) for p in pts)


class TestPendulumPartition:
    """Test the partition of the pendulum benchmark."""

    def test_table_shapes(self, pendulum_partition):
        assert pendulum_partition.N == 2
        for i in range(2):
            assert pendulum_partition.delta_lower[i].shape == (2, 2, 16, 4, 1)
            assert pendulum_partition.q(i) == 16
            assert pendulum_partition.rule_counts(i) == (2, 2)

    def test_tables_ordered_and_in_unit_interval(self, pendulum_partition):
        for lo, hi in zip(pendulum_partition.delta_lower, pendulum_partition.delta_upper):
            assert np.all(lo >= 0.0)
            assert np.all(lo <= hi)
            assert np.all(hi <= 1.0)

    def test_audit_passes(self, pendulum_system, pendulum_partition):
        audit = audit_envelope(
            pendulum_partition, pendulum_system, density=4, rng=np.random.default_rng(0), n_realised=50
        )
        assert audit.passed
        assert audit.n_points > 0
        assert len(audit.per_subsystem) == 2
        assert audit.to_dict()["passed"] is True

    def test_corner_constant_cells_have_one_distinct_corner(self, pendulum_partition):
        for i in range(2):
            for cell in range(pendulum_partition.q(i)):
                assert pendulum_partition.distinct_corners(i, cell) == [0]

    def test_interp_weights_sum_to_one(self, pendulum_partition):
        rng = np.random.default_rng(1)
        for x in _inside(rng, 100):
            w = interp_weights(pendulum_partition, 0, x)
            np.testing.assert_allclose(w.pairs.sum(axis=1), 1.0)
            assert w.corner_weights.sum() == pytest.approx(1.0)
            assert np.all(w.corner_weights >= 0.0)
            dense = w.dense(pendulum_partition.q(0))
            assert dense.shape == (16, 4)
            assert dense.sum() == pytest.approx(1.0)

    def test_reconstructed_bounds_contain_realised_grade(self, pendulum_system, pendulum_partition):
        rng = np.random.default_rng(2)
        for x in _inside(rng, 200):
            for i in range(2):
                h = combined_grades(pendulum_system, i, x)
                for l in range(2):
                    for j in range(2):
                        lo, hi = reconstruct_bounds(pendulum_partition, x, i, l, j, 0)
                        assert lo - 1e-9 <= h[l, j] <= hi + 1e-9

    def test_reconstructed_bounds_contain_envelope(self, pendulum_system, pendulum_partition):
        rng = np.random.default_rng(4)
        for x in _inside(rng, 100):
            env_lo, env_hi = combined_grade_bounds(pendulum_system, 1, x)
            lo, hi = reconstruct_bounds(pendulum_partition, x, 1, 0, 1, 0)
            assert lo <= env_lo[0, 1] + 1e-9
            assert env_hi[0, 1] <= hi + 1e-9

    def test_outside_box_rejected(self, pendulum_partition):
        with pytest.raises(PartitionError):
            reconstruct_bounds(pendulum_partition, [2.0, 0.0], 0, 0, 0, 0)

    def test_summary(self, pendulum_partition):
        summary = pendulum_partition.summary()
        assert summary["tau"] == 0
        assert len(summary["subsystems"]) == 2

    def test_check_compatible_mismatch(self, pendulum_partition, pendulum_system):
        pendulum_partition.check_compatible(pendulum_system)
        single = build_partition(
            pendulum_system, default_partition_box()[0].with_counts(1), samples_per_cell=8, polish=False
        )
        single.boxes = single.boxes[:1]
        single.delta_lower = single.delta_lower[:1]
        single.delta_upper = single.delta_upper[:1]
        with pytest.raises(PartitionError, match="covers 1 subsystems"):
            single.check_compatible(pendulum_system)


class TestEnvelopeTightness:
    """Test the delta tables against known grades and deliberate damage."""

    def test_single_rule_pair_has_unit_grade(self):
        rule = PlantRule(A=[[-1.0]], B=[[1.0]])
        system = LargeScaleSystem(
            subsystems=[Subsystem(index=0, rules=[rule])],
            controllers=[ControllerRuleBase(rules=[()])],
        )
        partition = build_partition(system, StateBox((-1.0,), (1.0,), (3,)), samples_per_cell=8)
        np.testing.assert_allclose(partition.delta_lower[0], 1.0, atol=1e-8)
        np.testing.assert_array_equal(partition.delta_upper[0], 1.0)
        for x in np.linspace(-1.0, 1.0, 11):
            lo, hi = reconstruct_bounds(partition, [x], 0, 0, 0, 0)
            assert lo == pytest.approx(1.0, abs=1e-8)
            assert hi == pytest.approx(1.0, abs=1e-12)

    def test_refinement_tightens_gap(self, pendulum_system):
        gaps = []
        for q in (2, 4, 8):
            partition = build_partition(
                pendulum_system, default_partition_box(q_per_dim=q), samples_per_cell=8, polish=False
            )
            # uniform cells, so the plain mean is the volume average
            gaps.append([float(np.mean(hi - lo)) for lo, hi in zip(partition.delta_lower, partition.delta_upper)])
        for coarse, fine in zip(gaps, gaps[1:]):
            assert all(f < c for c, f in zip(coarse, fine))

    def test_damaged_tables_fail_containment(self, pendulum_system, pendulum_partition):
        lower = [t.copy() for t in pendulum_partition.delta_lower]
        upper = [t.copy() for t in pendulum_partition.delta_upper]
        lower[0][0, 0] = upper[0][0, 0]
        damaged = FouPartition(
            boxes=pendulum_partition.boxes,
            tau=0,
            delta_lower=lower,
            delta_upper=upper,
            samples_per_cell=pendulum_partition.samples_per_cell,
        )
        audit = audit_envelope(damaged, pendulum_system, density=2, rng=np.random.default_rng(0), n_realised=50)
        assert not audit.passed
        assert audit.per_subsystem[0] < -1e-3
        assert audit.per_subsystem[1] >= -AUDIT_TOL

        rng = np.random.default_rng(8)
        escaped = 0
        for x in _inside(rng, 200):
            h = combined_grades(pendulum_system, 0, x)
            lo, hi = reconstruct_bounds(damaged, x, 0, 0, 0, 0)
            escaped += not (lo - 1e-9 <= h[0, 0] <= hi + 1e-9)
        assert escaped > 0


class TestSubFou:
    """Test slicing the FOU into several sub-FOUs."""

    @pytest.fixture(scope="class")
    def sliced(self):
        system = build_system()
        boxes = default_partition_box(q_per_dim=2)
        return system, build_partition(system, boxes, tau=2, samples_per_cell=8, polish=False)

    def test_slice_axis(self, sliced):
        _, partition = sliced
        assert partition.tau_plus_1 == 3
        assert partition.delta_lower[0].shape == (2, 2, 4, 4, 3)

    def test_active_slice_bounds_grade(self, sliced):
        system, partition = sliced
        rng = np.random.default_rng(6)
        for x in _inside(rng, 100):
            h = combined_grades(system, 0, x)
            for l in range(2):
                for j in range(2):
                    z = active_subfou(partition, system, 0, l, j, x)
                    assert 0 <= z <= 2
                    lo, hi = reconstruct_bounds(partition, x, 0, l, j, z)
                    assert lo - 1e-9 <= h[l, j] <= hi + 1e-9

    def test_explicit_grade_picks_slice(self, sliced):
        system, partition = sliced
        x = np.array([0.3, 0.0])
        lo, hi = combined_grade_bounds(system, 0, x)
        if hi[0, 0] > lo[0, 0]:
            assert active_subfou(partition, system, 0, 0, 0, x, grade=lo[0, 0]) == 0
            assert active_subfou(partition, system, 0, 0, 0, x, grade=hi[0, 0]) == 2


class TestPartitionBuilder:
    """Test builder arguments and persistence."""

    def test_rejects_sparse_sampling(self):
        with pytest.raises(PartitionError, match="samples_per_cell"):
            PartitionBuilder(samples_per_cell=4)

    def test_rejects_negative_tau(self):
        with pytest.raises(PartitionError, match="tau"):
            PartitionBuilder(tau=-1)

    def test_box_count_checked(self, pendulum_system):
        with pytest.raises(PartitionError, match="expected 2 state boxes"):
            PartitionBuilder(samples_per_cell=8).build(pendulum_system, default_partition_box()[:1])

    def test_save_load_round_trip(self, pendulum_partition, temp_dir):
        path = temp_dir / "partition.json"
        save_partition(pendulum_partition, path)
        back = load_partition(path)
        assert back.tau == pendulum_partition.tau
        assert back.boxes == pendulum_partition.boxes
        for i in range(2):
            np.testing.assert_array_equal(back.delta_lower[i], pendulum_partition.delta_lower[i])
            np.testing.assert_array_equal(back.delta_upper[i], pendulum_partition.delta_upper[i])

    def test_load_malformed(self, temp_dir):
        path = temp_dir / "bad.json"
        path.write_text('{"tau": 0}')
        with pytest.raises(PartitionError, match="malformed"):
            load_partition(path)
