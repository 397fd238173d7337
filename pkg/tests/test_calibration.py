"""Calibration-day sweeps: kernel shape, cost laws, and mode agreement."""

from __future__ import annotations

import pytest

from dlpc.devcomp import CostModel, KernelMode, Opcode
from dlpc.drivers.calibration import (
    SEGMENTS,
    build_sweep_full,
    build_sweep_partial,
    experiment_plan,
    n_experiments,
    run_calibration,
    sweep_slots,
)
from dlpc.pulse import CalibrationDataset

MODEL = CostModel(compile_a=0.354, compile_b=6.0e-3)


def _calib(n: int) -> CalibrationDataset:
    calib = CalibrationDataset.default(n)
    calib.prep_us = 500.0
    calib.detect_us = 1000.0
    return calib


def test_plan_covers_every_knob():
    assert n_experiments(1) == 2
    assert n_experiments(3) == 21
    plan = experiment_plan(_calib(3))
    assert len(plan) == 21
    assert [e.name for e in plan[:3]] == ["q0/freq", "q0/amp", "q1/freq"]
    assert plan[-1].name == "q1-q2/pair4"


def test_sweep_kernel_shapes():
    partial = build_sweep_partial(prep_us=500.0, detect_us=1000.0)
    assert partial.mode is KernelMode.PARTIAL
    assert len(partial.instructions) == 2 * SEGMENTS + 7
    assert partial.n_slots == SEGMENTS + 1
    full = build_sweep_full(sweep_slots(experiment_plan(_calib(1))[0], _calib(1)),
                            prep_us=500.0, detect_us=1000.0)
    assert full.mode is KernelMode.FULL
    assert len(full.instructions) == 2 * SEGMENTS + 5
    assert full.n_slots == 0
    # Resuming the partial kernel replays the scan loop, not the header.
    sync = next(i for i in partial.instructions if i.op is Opcode.RPC_SYNC)
    assert sync.args[1] == 1


def test_sweep_compile_costs_at_fitted_model():
    partial = build_sweep_partial(prep_us=500.0, detect_us=1000.0)
    full = build_sweep_full((1e7, *[0.5] * SEGMENTS), prep_us=500.0, detect_us=1000.0)
    assert MODEL.compile_time(len(partial.instructions)) == pytest.approx(1.2)
    assert MODEL.compile_time(len(full.instructions)) == pytest.approx(1.188)


def test_full_sweep_rejects_wrong_arity():
    with pytest.raises(ValueError, match="slot values"):
        build_sweep_full((1e7, 0.5), prep_us=500.0, detect_us=1000.0)


def test_baseline_compiles_per_experiment():
    calib = _calib(2)
    report = run_calibration(calib, "baseline", cost_model=MODEL, run_seed=4)
    assert report.n_experiments == n_experiments(2) == 9
    assert report.costs.n_compiles == 9
    assert report.version_advance == 9
    assert report.costs.rpc_s == 0.0
    # Shot clock: 50 shots x (prep + 67 segments x 2.5 us + detect) per sweep.
    per_exp_s = 50 * (500.0 + SEGMENTS * 2.5 + 1000.0) * 1e-6
    assert report.costs.device_s == pytest.approx(9 * per_exp_s)


def test_streaming_compiles_once_for_the_whole_day():
    calib = _calib(2)
    report = run_calibration(calib, "dlpc", cost_model=MODEL, run_seed=4)
    assert report.costs.n_compiles == 1
    assert report.costs.compile_s == pytest.approx(1.2)
    assert report.version_advance == 9
    assert report.costs.rpc_s == pytest.approx(9 * MODEL.rpc_roundtrip_s)


def test_streaming_compile_time_independent_of_device_size():
    times = []
    for n in (1, 2, 4):
        report = run_calibration(_calib(n), "dlpc", cost_model=MODEL)
        times.append(report.costs.compile_s)
        assert report.kernel_instructions == 2 * SEGMENTS + 7
    assert times[0] == times[1] == times[2]


def test_modes_fit_identical_values():
    a, b = _calib(2), _calib(2)
    base = run_calibration(a, "baseline", cost_model=MODEL, run_seed=11)
    dlpc = run_calibration(b, "dlpc", cost_model=MODEL, run_seed=11)
    assert base.fitted == dlpc.fitted
    assert a.qubits == b.qubits
    assert a.pairs == b.pairs
    assert a.version == b.version


def test_fits_track_the_hidden_truth():
    calib = _calib(1)
    before = calib.qubit(0).omega
    report = run_calibration(calib, "baseline", cost_model=MODEL, run_seed=3)
    after = calib.qubit(0).omega
    # Fit moved the value but stayed inside the 5 percent scan window.
    assert after != before
    assert abs(after - before) <= 0.05 * before
    assert set(report.fitted) == {"q0/freq", "q0/amp"}
