"""Anchor fit: exact compile line, least-squares readout split."""

from __future__ import annotations

import pytest

from dlpc.fitting import ANCHORS, CostAnchors, calibrated_dataset, fit_cost_model


@pytest.fixture(scope="module")
def fit():
    return fit_cost_model()


def test_compile_line_solved_exactly(fit):
    # Hand solve: the generators emit 86 pool and 141 sweep instructions, so
    # b = (1.2 - 0.87) / (141 - 86) and a = 0.87 - 86 b.
    assert fit.cost_model.compile_b == pytest.approx(0.33 / 55, abs=1e-15)
    assert fit.cost_model.compile_a == pytest.approx(0.87 - 86 * 0.006, abs=1e-12)
    assert fit.reproduced["pool_compile_s"] == pytest.approx(ANCHORS.pool_compile_s)
    assert fit.reproduced["sweep_compile_s"] == pytest.approx(ANCHORS.sweep_compile_s)


def test_device_fractions_reproduced_within_two_points(fit):
    rep = fit.reproduced
    assert rep["baseline_device_fraction"] == pytest.approx(
        ANCHORS.baseline_device_fraction, abs=0.02
    )
    assert rep["streamed_device_fraction"] == pytest.approx(
        ANCHORS.streamed_device_fraction, abs=0.02
    )


def test_readout_split_one_to_two(fit):
    assert fit.detect_us == pytest.approx(2.0 * fit.prep_us)
    total = fit.prep_us + fit.detect_us
    # Millisecond-scale readout, the regime the anchors describe.
    assert 1400.0 < total < 1800.0


def test_fit_is_deterministic(fit):
    again = fit_cost_model()
    assert again.cost_model == fit.cost_model
    assert again.prep_us == fit.prep_us
    assert again.detect_us == fit.detect_us


def test_calibrated_dataset_carries_fitted_timings(fit):
    calib = calibrated_dataset(2, fit)
    assert calib.prep_us == fit.prep_us
    assert calib.detect_us == fit.detect_us
    assert set(calib.qubits) == {0, 1}


def test_perfect_anchor_consistency_would_fit_exactly():
    # Anchors generated from a known readout time are recovered to the grid's
    # precision, confirming the scalar search is not tolerance-limited.
    base = fit_cost_model()
    readout = base.prep_us + base.detect_us
    rep = base.reproduced
    synthetic = CostAnchors(
        pool_compile_s=ANCHORS.pool_compile_s,
        sweep_compile_s=ANCHORS.sweep_compile_s,
        baseline_device_fraction=rep["baseline_device_fraction"],
        streamed_device_fraction=rep["streamed_device_fraction"],
        amortize_iterations=ANCHORS.amortize_iterations,
    )
    refit = fit_cost_model(synthetic)
    assert refit.prep_us + refit.detect_us == pytest.approx(readout, rel=1e-4)
