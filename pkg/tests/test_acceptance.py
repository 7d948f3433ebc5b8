"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from tfsuperres import cli, fisher
from tfsuperres.config import RunConfig
from tfsuperres.modes import ideal_hg_probs, ideal_projection_prob, quadrature_projection_prob
from tfsuperres.montecarlo import ExperimentSpec, run_experiment
from tfsuperres.pulsegate import (GateModel, InputSignal, PulseGateConfig, closed_form_ratio,
                                  upconversion_probs)
from tfsuperres.tomography import CalibrationSet, TomographyModel, fit_coefficients, predicted_probs

SIGMA_NU, PM = 182.0, 28.0


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return emit


def test_criterion_1_closed_form_vs_quadrature(report):
    start = time.perf_counter()
    worst = 0.0
    for j in (0, 1, 2):
        for s in np.linspace(0.0, 2.0, 21):
            q = ideal_projection_prob(j, s, 1.0)
            num = quadrature_projection_prob(j, s, 1.0)
            err = abs(num) if q == 0 else abs(num - q) / q
            worst = max(worst, err)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 10
    report(1, ok, f"max rel err {worst:.2e} (< 1e-6), {elapsed:.2f} s (< 10 s)")
    assert worst < 1e-6
    assert elapsed < 10


def test_criterion_2_pulse_gate_nested_vs_closed_form(report):
    start = time.perf_counter()
    worst = 0.0
    for dnu in (0.0, 45.0, 91.0, 182.0):
        for dt in (0.0, 0.2, 0.4, 0.8):
            for pm in (14.0, 28.0, 56.0):
                p = upconversion_probs(PulseGateConfig(SIGMA_NU, pm_sigma=pm),
                                       InputSignal(SIGMA_NU, dnu, dt), orders=(0, 1))
                exact = closed_form_ratio(SIGMA_NU, SIGMA_NU, pm, dnu, dt)
                worst = max(worst, abs(p[1] / p[0] - exact) / exact)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-3 and elapsed < 120
    report(2, ok, f"48 grid points, max rel err {worst:.2e} (< 1e-3), {elapsed:.1f} s (< 120 s)")
    assert worst < 1e-3
    assert elapsed < 120


def test_criterion_3_bound_structure(report):
    f0 = fisher.fisher_direct(0.0)
    f10 = 4 * fisher.fisher_direct(10.0)
    family = lambda s: np.array([ideal_projection_prob(j, s, 1.0) for j in range(21)])
    seps = np.linspace(0.01, 2.0, 40)
    hg_err = max(abs(4 * fisher.fisher_model(family, s) - 1) for s in seps)
    n = 20000
    gate = GateModel(SIGMA_NU, PM, points=257)
    models = [family, lambda s: ideal_hg_probs(s, 1.0), gate]
    largest = max(fisher.fisher_model(m, s, n) for m in models for s in seps)
    largest = max(largest, max(fisher.fisher_direct(s, 1.0, n) for s in seps))
    cap = n / 4 * (1 + 1e-6)
    ok = f0 == 0.0 and 0.99 <= f10 <= 1.01 and hg_err < 1e-4 and largest <= cap
    report(3, ok, f"F(0) = {f0}, 4F(10) = {f10:.7f}, HG family rel dev {hg_err:.1e}, "
                  f"max FI / (N/4) = {largest / (n / 4):.7f}")
    assert f0 == 0.0
    assert 0.99 <= f10 <= 1.01
    assert hg_err < 1e-4
    assert largest <= cap


def test_criterion_4_extinction_floor(report):
    ratio = closed_form_ratio(SIGMA_NU, SIGMA_NU, PM)
    db = -10 * math.log10(ratio)
    p = upconversion_probs(PulseGateConfig(SIGMA_NU, pm_sigma=PM), InputSignal(SIGMA_NU))
    db_quad = -10 * math.log10(p[1] / p[0])
    ok = abs(db - 22.33) < 0.005 and abs(db - 22.9) <= 1.0 and abs(db_quad - db) < 1e-3
    report(4, ok, f"model {db:.3f} dB (quadrature {db_quad:.3f} dB) vs measured 22.9 +- 0.3 dB; "
                  f"difference {22.9 - db:.2f} dB; raw floor {4 * math.sqrt(ratio):.4f} sigma")
    assert db == pytest.approx(22.33, abs=0.005)
    assert abs(db - 22.9) <= 1.0
    assert db_quad == pytest.approx(db, abs=1e-3)


def test_criterion_5_calibrated_pulse_gate_monte_carlo(report):
    start = time.perf_counter()
    spec = ExperimentSpec((0.2,), (20000,), 1000, "pulse_gate", seed=1,
                          gate_config=PulseGateConfig(SIGMA_NU, pm_sigma=PM))
    st = run_experiment(spec)
    elapsed = time.perf_counter() - start
    mse = float(st.mse[0, 0])
    std = 1 / fisher.fisher_direct(0.2, 1.0, 20000)
    ql = 4 / 20000
    model = 1 / fisher.fisher_model(GateModel(SIGMA_NU, PM, points=257), 0.2, 20000)
    gain, excess = std / mse, mse / ql
    ok = gain >= 5 and excess <= 2 and elapsed < 300
    report(5, ok, f"MSE {mse:.3e}: {gain:.1f}x below standard CRLB (>= 5), {excess:.2f}x quantum "
                  f"limit (<= 2; model CRLB is {model / ql:.2f}x), {elapsed:.1f} s (< 300 s)")
    assert gain >= 5
    assert elapsed < 300
    assert excess <= 2


def test_criterion_6_rayleigh_curse_baseline(report):
    small = run_experiment(ExperimentSpec((0.1,), (20000,), 1000, "direct_spectrometer", seed=1))
    large = run_experiment(ExperimentSpec((2.0,), (20000,), 1000, "direct_spectrometer", seed=1))
    ql = 4 / 20000
    curse = float(small.mse[0, 0]) / ql
    resolved = float(large.mse[0, 0]) * fisher.fisher_direct(2.0, 1.0, 20000)
    ok = curse >= 10 and resolved <= 1.5
    report(6, ok, f"s = 0.1: MSE = {curse:.1f}x quantum limit (>= 10); "
                  f"s = 2: MSE = {resolved:.3f}x standard CRLB (<= 1.5)")
    assert curse >= 10
    assert resolved <= 1.5


def test_criterion_7_tomography_round_trip(report):
    grid = np.linspace(0.0, 2.0, 20)
    gate = GateModel(SIGMA_NU, PM, points=257)
    model = fit_coefficients(CalibrationSet(grid, np.array([gate(s) for s in grid])), 1.0, 4)
    s = np.linspace(0.0, 2.0, 101)
    pred = np.array([predicted_probs(model, x) for x in s])
    truth = np.array([gate(x) for x in s])
    rms = float(np.sqrt(np.mean((pred - truth) ** 2)))
    perfect = fit_coefficients(CalibrationSet(grid, np.array([ideal_hg_probs(x, 1.0) for x in grid])),
                               1.0, 4)
    dev = float(np.max(np.abs(perfect.coefficients - TomographyModel.perfect().coefficients)))
    ok = rms < 1e-3 and dev < 1e-6
    report(7, ok, f"gate-model prediction RMS {rms:.2e} (< 1e-3); perfect-device identity "
                  f"deviation {dev:.2e} (< 1e-6)")
    assert rms < 1e-3
    assert dev < 1e-6


def test_criterion_8_fig3_determinism(tmp_path, report):
    cfg = RunConfig(seed=2024, plots=False)
    cli.cmd_reproduce_fig3(cfg.replace(workers=1), tmp_path / "w1")
    cli.cmd_reproduce_fig3(cfg.replace(workers=8), tmp_path / "w8")
    names = sorted(p.name for p in (tmp_path / "w1").iterdir())
    same = all((tmp_path / "w1" / n).read_bytes() == (tmp_path / "w8" / n).read_bytes()
               for n in names)
    ok = same and "fig3_frequency.csv" in names and "fig3_time.csv" in names
    report(8, ok, f"{len(names)} output files compared, 1 vs 8 threads byte-identical: {same}")
    assert ok
