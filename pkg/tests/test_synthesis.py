"""Tests for LMI assembly, gain recovery and the gamma search."""

import numpy as np
import pytest

from it2synth.bench.pendulum import default_partition_box
from it2synth.errors import AssemblyError, InfeasibleError, ModelInputError
from it2synth.fuzzy.model import ControllerRuleBase, LargeScaleSystem, PlantRule, Subsystem, combined_grades
from it2synth.partition.fou import FouPartition, StateBox, build_partition
from it2synth.performance.dissipativity import preset, supply_rate
from it2synth.pipeline import synthesis_options
from it2synth.simulation.closed_loop import integrate, lyapunov_trace
from it2synth.synthesis import (
    BisectionStep,
    SynthesisOptions,
    assemble,
    assemble_theorem1,
    expected_counts,
    interconnection_bound,
    interconnection_table,
    is_monotone,
    recover_gains,
    synthesize,
    variable_tally,
)
from tests.factories import random_system

R = np.deg2rad(88.0)


@pytest.fixture
def hinf():
    return preset("h-infinity", n_z=1, m_w=1, gamma=1.0)


def _values(result):
    """Decision-variable values keyed the way the assembler names them."""
    values = {}
    for i, X in enumerate(result.X):
        values[f"X[{i}]"] = X
        values[f"M[{i}]"] = result.M[i]
        if result.K is not None:
            values[f"K[{i}]"] = result.K[i]
        for j, N in enumerate(result.N[i]):
            values[f"N[{i},{j}]"] = N
    for (i, l, j, z), W in result.W.items():
        values[f"W[{i},{l},{j},{z}]"] = W
    return values


def _unstable_without_input():
    """x' = x with a zero input matrix: no gain can stabilise it."""
    rule = PlantRule(A=[[1.0]], B=[[0.0]])
    system = LargeScaleSystem(
        subsystems=[Subsystem(index=0, rules=[rule])],
        controllers=[ControllerRuleBase(rules=[()])],
    )
    partition = build_partition(system, StateBox((-1.0,), (1.0,), (1,)), samples_per_cell=8, polish=False)
    return system, partition


def _random_values(rng, system):
    """Random X and N per subsystem with the gains they recover."""
    values, X, gains = {}, [], []
    for sub in system.subsystems:
        i = sub.index
        S = rng.normal(size=(sub.n, sub.n))
        X.append(S @ S.T + 0.5 * np.eye(sub.n))
        values[f"X[{i}]"] = X[i]
        per_rule = []
        for j in range(system.controllers[i].c):
            N = rng.normal(size=(sub.m, sub.n))
            values[f"N[{i},{j}]"] = N
            per_rule.append(N @ np.linalg.inv(X[i]))
        gains.append(per_rule)
    return values, X, gains


class TestSynthesisOptions:
    """Test option validation."""

    def test_defaults(self):
        opts = SynthesisOptions()
        assert opts.tau0 == 1.0
        assert opts.tau_for(1, 2) == 1.0

    def test_tau_i_below_tau0(self):
        with pytest.raises(ModelInputError, match="tau_i"):
            SynthesisOptions(tau0=1.0, tau_i=[0.5, 2.0])

    def test_tau_i_length(self):
        opts = SynthesisOptions(tau_i=[1.0, 2.0, 3.0])
        with pytest.raises(ModelInputError, match="3 entries"):
            opts.tau_for(0, 2)

    def test_bad_bracket(self):
        with pytest.raises(ModelInputError, match="bracket"):
            SynthesisOptions(gamma_bracket=(2.0, 1.0))

    def test_unknown_theorem(self):
        with pytest.raises(ModelInputError, match="theorem"):
            SynthesisOptions(theorem="robust")


class TestInterconnection:
    """Test the coupling bounds."""

    def test_pendulum_bounds(self, pendulum_system):
        assert interconnection_bound(pendulum_system, 0, 1) == pytest.approx(0.25)
        assert interconnection_bound(pendulum_system, 1, 0) == pytest.approx(0.20)

    def test_table_diagonal(self, pendulum_system):
        table = interconnection_table(pendulum_system)
        np.testing.assert_allclose(np.diag(table), 0.0)

    def test_equal_indices_rejected(self, pendulum_system):
        with pytest.raises(ModelInputError):
            interconnection_bound(pendulum_system, 1, 1)


class TestAssembly:
    """Test constraint tallies and performance checks."""

    def test_pendulum_counts(self, pendulum_system, pendulum_partition, hinf):
        family = assemble_theorem1(pendulum_system, pendulum_partition, hinf, SynthesisOptions())
        counts = family.counts()
        assert counts == {
            "membership_relaxed": 32,
            "output_bound": 4,
            "positivity": 2,
            "slack_positive": 8,
            "slack_shifted": 8,
            "storage_bound": 2,
        }
        assert counts == expected_counts(pendulum_system, pendulum_partition, hinf)
        assert len(family.variables) == 18
        assert variable_tally(family) == {"symmetric": 14, "rectangular": 4}

    def test_gain_bound_family(self, pendulum_system, pendulum_partition, hinf):
        family = assemble_theorem1(
            pendulum_system, pendulum_partition, hinf, SynthesisOptions(gain_bound=100.0)
        )
        assert family.counts()["gain_bound"] == 6
        assert family.counts() == expected_counts(pendulum_system, pendulum_partition, hinf, gain_bound=True)

    def test_peak_family_for_energy_to_peak(self, pendulum_system, pendulum_partition):
        perf = preset("energy-to-peak", gamma=1.0)
        family = assemble_theorem1(pendulum_system, pendulum_partition, perf)
        assert family.counts()["peak_bound"] == 4

    def test_disturbance_free_counts(self, pendulum_system, pendulum_partition):
        family = assemble(
            pendulum_system, pendulum_partition, None, SynthesisOptions(theorem="disturbance-free")
        )
        assert "output_bound" not in family.counts()
        assert family.counts()["positivity"] == 2
        assert all(layout.K is None for layout in family.layouts)

    def test_lifted_layout(self, pendulum_system, pendulum_partition, hinf):
        family = assemble_theorem1(pendulum_system, pendulum_partition, hinf)
        # state, disturbance, interconnection lift, output lift
        assert family.layouts[0].block_sizes == [2, 1, 2, 1]

    def test_missing_performance(self, pendulum_system, pendulum_partition):
        with pytest.raises(AssemblyError, match="needs performance weights"):
            assemble(pendulum_system, pendulum_partition, None, SynthesisOptions())

    def test_feedthrough_rejected_for_peak_criteria(self):
        system = random_system(np.random.default_rng(3))
        box = StateBox((-2.0, -2.0), (2.0, 2.0), (1, 1))
        partition = build_partition(system, box, samples_per_cell=8, polish=False)
        with pytest.raises(AssemblyError, match="standing assumptions"):
            assemble_theorem1(system, partition, preset("energy-to-peak", gamma=1.0))

    def test_very_strict_passivity_rejected_without_feedthrough(self, pendulum_system, pendulum_partition):
        perf = preset("very-strict-passivity", epsilon=0.1, sigma=0.2)
        with pytest.raises(AssemblyError, match=r"items \[5\]"):
            assemble_theorem1(pendulum_system, pendulum_partition, perf)

    def test_identical_corners_share_one_constraint(self, hinf):
        system = random_system(np.random.default_rng(3))
        box = StateBox((-2.0, -2.0), (2.0, 2.0), (1, 1))
        partition = build_partition(system, box, samples_per_cell=8, polish=False)
        assert partition.distinct_corners(0, 0) == [0]
        family = assemble_theorem1(system, partition, hinf)
        assert family.counts()["membership_relaxed"] == 2

        lower = [t.copy() for t in partition.delta_lower]
        lower[0][:, :, 0, 3, :] *= 0.5
        split = FouPartition(
            boxes=partition.boxes,
            tau=0,
            delta_lower=lower,
            delta_upper=[t.copy() for t in partition.delta_upper],
        )
        assert split.distinct_corners(0, 0) == [0, 3]
        assert split.distinct_corners(1, 0) == [0]
        family = assemble_theorem1(system, split, hinf)
        names = sorted(c.name for c in family.constraints if c.family == "membership_relaxed")
        assert names == [
            "membership_relaxed[0,0,0,0000]",
            "membership_relaxed[0,0,3,0000]",
            "membership_relaxed[1,0,0,0000]",
        ]
        assert family.counts() == expected_counts(system, split, hinf)


class TestGainRecovery:
    """Test G = N X^-1."""

    def test_identity(self):
        rng = np.random.default_rng(0)
        S = rng.normal(size=(3, 3))
        X = S @ S.T + np.eye(3)
        N = [rng.normal(size=(2, 3)), rng.normal(size=(2, 3))]
        gains, conds = recover_gains([X], [N])
        for G, Nij in zip(gains[0], N):
            np.testing.assert_allclose(G @ X, Nij, atol=1e-10)
        assert conds[0] == pytest.approx(np.linalg.cond(X))


class TestBisectionTrace:
    """Test the monotonicity check on bisection traces."""

    def test_monotone(self):
        trace = [
            BisectionStep(10.0, "feasible", 1e-3),
            BisectionStep(0.1, "infeasible", float("nan")),
            BisectionStep(1.0, "feasible", 1e-4),
        ]
        assert is_monotone(trace)

    def test_not_monotone(self):
        trace = [
            BisectionStep(1.0, "feasible", 1e-4),
            BisectionStep(5.0, "infeasible", float("nan")),
        ]
        assert not is_monotone(trace)


class TestPendulumSynthesis:
    """End-to-end synthesis on the benchmark."""

    def test_gamma_found(self, pendulum_synthesis):
        gamma, result = pendulum_synthesis
        assert 0.0 < gamma <= 1.5
        assert result.gamma == pytest.approx(gamma)
        assert result.performance.kind == "h-infinity"

    def test_audit_passed(self, pendulum_synthesis):
        _, result = pendulum_synthesis
        assert result.audit.passed
        for X in result.X:
            assert np.linalg.eigvalsh(X)[0] > 0.0

    def test_trace_monotone(self, pendulum_synthesis):
        _, result = pendulum_synthesis
        assert len(result.trace) >= 2
        assert is_monotone(result.trace)
        assert result.trace_frame().columns.tolist() == ["gamma", "status", "margin"]

    def test_gains_consistent(self, pendulum_synthesis):
        _, result = pendulum_synthesis
        for i, per_rule in enumerate(result.gains):
            assert len(per_rule) == 2
            for G, N in zip(per_rule, result.N[i]):
                assert G.shape == (1, 2)
                np.testing.assert_allclose(G @ result.X[i], N, atol=1e-8)
        frame = result.gains_frame()
        assert len(frame) == 4
        assert {"subsystem", "rule", "row", "g0", "g1"} <= set(frame.columns)

    def test_grade_weighted_omega_negative(self, pendulum_system, pendulum_partition, pendulum_config, pendulum_synthesis):
        _, result = pendulum_synthesis
        family = assemble(
            pendulum_system, pendulum_partition, result.performance, synthesis_options(pendulum_config)
        )
        values = _values(result)
        omegas = {key: mat.evaluate(values) for key, mat in family.omegas.items()}

        rng = np.random.default_rng(9)
        for x in np.column_stack([rng.uniform(-R, R, 200), rng.uniform(-4.0, 4.0, 200)]):
            for i in range(2):
                h = combined_grades(pendulum_system, i, x)
                total = sum(h[l, j] * omegas[(i, l, j)] for l in range(2) for j in range(2))
                assert np.linalg.eigvalsh(total)[-1] < 0.0

    def test_report_content(self, pendulum_synthesis):
        _, result = pendulum_synthesis
        report = result.to_dict()
        assert report["audit_passed"] is True
        assert report["bisection_monotone"] is True
        assert report["constraint_counts"]["membership_relaxed"] == 32
        assert np.asarray(report["interconnection_bounds"]).shape == (2, 2)

    def test_disturbance_free(self, pendulum_disturbance_free):
        result = pendulum_disturbance_free
        assert result.theorem == "disturbance-free"
        assert result.gamma is None
        assert result.K is None
        assert result.audit.passed

    def test_disturbance_free_lyapunov_decreases(self, pendulum_system, pendulum_disturbance_free):
        result = pendulum_disturbance_free
        rng = np.random.default_rng(5)
        box = default_partition_box()[0]
        for _ in range(20):
            x0 = [rng.uniform(box.lower, box.upper) for _ in range(2)]
            traj = integrate(pendulum_system, result.gains, x0, T=5.0, dt=1e-3)
            assert np.all(np.diff(lyapunov_trace(traj, result.X)) < 0.0)

    def test_fixed_gamma_feasible(self, pendulum_system, pendulum_partition, pendulum_config, pendulum_synthesis):
        gamma, _ = pendulum_synthesis
        opts = synthesis_options(pendulum_config)
        result = synthesize(
            pendulum_system, pendulum_partition, preset("h-infinity", gamma=2.0 * gamma), opts
        )
        assert result.audit.passed
        assert result.gamma == pytest.approx(2.0 * gamma)


class TestQuadraticForm:
    """Test Omega against a direct expansion of the Lyapunov derivative and supply rate."""

    def test_schur_complement_matches_direct_expansion(self, hinf):
        rng = np.random.default_rng(2024)
        opts = SynthesisOptions(tau0=0.5, tau_i=[0.7, 1.3])
        box = StateBox((-2.0, -2.0), (2.0, 2.0), (1, 1))
        checked = 0
        for _ in range(25):
            system = random_system(rng)
            partition = build_partition(system, box, samples_per_cell=8, polish=False)
            family = assemble_theorem1(system, partition, hinf, opts)
            abar = interconnection_table(system)
            for _ in range(4):
                values, X, gains = _random_values(rng, system)
                g = [rng.normal(size=2) for _ in range(2)]
                w = [rng.normal(size=1) for _ in range(2)]
                x = [X[i] @ g[i] for i in range(2)]
                bound = 0.0
                exact = 0.0
                for i, sub in enumerate(system.subsystems):
                    plant = rng.dirichlet(np.ones(sub.p))
                    ctrl = rng.dirichlet(np.ones(system.controllers[i].c))
                    h = np.outer(plant, ctrl)
                    total = sum(
                        h[l, j] * family.omegas[(i, l, j)].evaluate(values)
                        for l in range(sub.p)
                        for j in range(len(ctrl))
                    )
                    k = sub.n + sub.m_w
                    schur = total[:k, :k] - total[:k, k:] @ np.linalg.solve(total[k:, k:], total[k:, :k])
                    zeta = np.concatenate([g[i], w[i]])
                    form = float(zeta @ schur @ zeta)

                    u = sum(m * (G @ x[i]) for m, G in zip(ctrl, gains[i]))
                    local = sum(wl * (r.A @ x[i] + r.B @ u + r.D1 @ w[i]) for wl, r in zip(plant, sub.rules))
                    coupled = sum(wl * (r.interconnections[1 - i] @ x[1 - i]) for wl, r in zip(plant, sub.rules))
                    z = sum(wl * (r.C @ x[i] + r.D2 @ w[i]) for wl, r in zip(plant, sub.rules))
                    J = supply_rate(hinf, z, w[i])
                    terms = [
                        2.0 * float(g[i] @ local),
                        opts.tau_for(i, 2) * float(g[i] @ g[i]),
                        float(np.sum(abar[:, i] ** 2)) / opts.tau0 * float(x[i] @ x[i]),
                        -J,
                    ]
                    assert abs(form - sum(terms)) <= 1e-8 * max(1.0, sum(abs(t) for t in terms))
                    bound += form
                    exact += 2.0 * float(g[i] @ (local + coupled)) - J
                    checked += 1
                # coupling cross terms are dominated by the tau and abar weights
                assert exact <= bound + 1e-9 * max(1.0, abs(bound))
        assert checked >= 100


class TestInfeasibility:
    """Test that unsolvable conditions are reported as infeasible."""

    @pytest.mark.parametrize("theorem", ["disturbance-free", "extended-dissipativity"])
    def test_unstable_without_input(self, theorem):
        system, partition = _unstable_without_input()
        perf = None if theorem == "disturbance-free" else preset("h-infinity", gamma=10.0)
        with pytest.raises(InfeasibleError) as exc:
            synthesize(system, partition, perf, SynthesisOptions(theorem=theorem))
        assert exc.value.exit_code == 6
