import math

import pytest

import qpecal


def test_closed_form_matches_circuit():
    model = qpecal.SignalModel.cspam()
    for k in range(4):
        for seq in (qpecal.Sequence.A, qpecal.Sequence.B):
            closed = qpecal.outcome_probability(model, 1.9, k, seq)
            circuit = qpecal.circuit_probability(model, 1.9, k, seq)
            assert closed == pytest.approx(circuit, abs=1e-12)


def test_exact_counts_recover_angle():
    schedule = qpecal.build_gate_schedule(11, 10000)
    theta = math.pi / 2 + 0.2
    records = qpecal.analytic_records(schedule, qpecal.SignalModel.ideal(), theta)
    assert len(records) == 24
    assert abs(qpecal.rpe_estimate(records).estimate - theta) <= math.pi / 2**11
    report = qpecal.brpe_estimate(records, grid_points=2**15)
    assert abs(report.estimate - theta) <= 2 * 2 * math.pi / (2**15 - 1)
    assert 0.0 <= report.confidence <= 1.0


def test_simulation_is_reproducible():
    schedule = qpecal.build_gate_schedule(5, 8)
    model = qpecal.SignalModel.ideal()
    first = qpecal.simulate(schedule, model, 1.7, seed=42)
    second = qpecal.simulate(schedule, model, 1.7, seed=42)
    assert first == second
    assert sum(r.shots for r in first) == schedule.total_shots == 96


def test_posterior_is_normalized():
    records = [qpecal.RoundRecord(0, "a", 9, 4), qpecal.RoundRecord(0, "b", 9, 9)]
    x, p = qpecal.brpe_posterior(records, grid_points=512)
    assert len(x) == len(p) == 512
    assert sum(p) == pytest.approx(1.0, abs=1e-9)


def test_ramsey_schedule_ladder():
    schedule = qpecal.build_ramsey_schedule(1000.0, 1.024, 9)
    assert schedule.K == 11
    assert schedule.wait_times[0] == 5e-4
    assert schedule.wait_times[-1] == 1.024


def test_small_sweep_and_threshold():
    results = qpecal.run_sweep(protocol="both", d=4, trials=10, shots=32, seed=3)
    assert [r.protocol for r in results] == ["rpe", "brpe"]
    for result in results:
        assert len(result.rows) == 5
        mean = sum(row.mean_abs_err for row in result.rows) / 5
        assert result.mean_abs_err == pytest.approx(mean, rel=1e-12)
    assert qpecal.delta_threshold(results[1], 0.02) is not None


def test_scaling_rows_and_helpers():
    rows = qpecal.scaling_study(shot_counts=[8], trials=20, replicates=2, rounds=6)
    assert {r.protocol for r in rows} == {"rpe", "brpe"}
    assert qpecal.fidelity_error(3.7e-3) == pytest.approx(1.71125e-6)
    assert qpecal.confidence_score(1.0, 0.0, 10.0) == pytest.approx(0.9932, abs=1e-4)


def test_errors_surface_as_python_exceptions(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("k,sequence,shots,ones\n0,a,9,12\n")
    with pytest.raises(ValueError, match=r"bad\.csv:2:"):
        qpecal.load_replay(str(bad))
    with pytest.raises(KeyError):
        qpecal.run_sweep(frobnicate=1)
