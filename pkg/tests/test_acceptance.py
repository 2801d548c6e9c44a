"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one pass/fail line (visible with `pytest -s` or `-rA`);
`pytest -v` also reports one line per criterion through the test names.
Criteria 8 and 9 share one set of grid runs via a session fixture.
"""

import dataclasses
import filecmp
import math
import time

import numpy as np
import pytest

from hybridosc import (
    IntegratorConfig,
    PositiveDefinitenessLost,
    analytic_mean,
    cm_transform,
    fit_mean_constants,
    integrate,
    quantum_analytic_covariance,
    sample_record,
    transform_covariance,
)
from hybridosc.cli import main
from hybridosc.oracles import classical_moment_propagate, moments_from_state
from hybridosc.scenarios import Scenario, builtin_scenarios
from hybridosc.verification import pde_suite


def _report(number, name, **values):
    detail = ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in values.items())
    print(f"[acceptance] criterion {number} ({name}): PASS  {detail}")


def _records(traj, include_classical_motion=False):
    return [sample_record(s, traj.params, include_classical_motion) for s in traj.samples]


@pytest.fixture(scope="session")
def dense_fig4():
    sc = dataclasses.replace(builtin_scenarios()["fig4"], samples_per_period=256)
    return sc.run()


@pytest.fixture(scope="session")
def pde_results():
    return {r.name: r for r in pde_suite()}


def _local_extrema(values):
    idx = []
    for i in range(1, len(values) - 1):
        if values[i] > values[i - 1] and values[i] >= values[i + 1]:
            idx.append(i)
        elif values[i] < values[i - 1] and values[i] <= values[i + 1]:
            idx.append(i)
    return idx


def test_criterion_01_fig4_total_energy():
    start = time.perf_counter()
    traj = builtin_scenarios()["fig4"].run()
    runtime = time.perf_counter() - start
    etot = np.array([r["Etot"] for r in _records(traj)])
    drift = float(np.max(np.abs(etot - etot[0])) / etot[0])
    assert etot[0] == pytest.approx(1.125, rel=1e-12)
    assert traj.times[-1] == pytest.approx(4.0 * math.pi)
    assert drift <= 1e-8
    assert runtime < 1.0
    _report(1, "fig4 energy", E0=float(etot[0]), drift=drift, seconds=runtime)


def test_criterion_02_fig6_total_energy():
    start = time.perf_counter()
    traj = builtin_scenarios()["fig6"].run()
    runtime = time.perf_counter() - start
    etot = np.array([r["Etot"] for r in _records(traj)])
    drift = float(np.max(np.abs(etot - etot[0])) / etot[0])
    assert abs(etot[0] - 12.51) <= 0.005
    assert drift <= 1e-8
    assert runtime < 1.0
    _report(2, "fig6 energy", E0=float(etot[0]), drift=drift, seconds=runtime)


def test_criterion_03_equal_mass_energy_exchange(dense_fig4):
    recs = _records(dense_fig4)
    t = np.array([r["t"] for r in recs])
    e_cm = np.array([r["ER"] for r in recs])
    etot = recs[0]["Etot"]
    fraction = float((e_cm.max() - e_cm.min()) / etot)
    assert 0.30 <= fraction <= 0.50

    period = dense_fig4.params.period
    maxima = [i for i in range(1, len(e_cm) - 1)
              if e_cm[i] > e_cm[i - 1] and e_cm[i] >= e_cm[i + 1]]
    assert maxima, "no E_R maxima detected"
    worst = 0.0
    for i in maxima:
        nearest = round(t[i] / (period / 4.0)) * (period / 4.0)
        worst = max(worst, abs(t[i] - nearest) / period)
    assert worst <= 0.08
    _report(3, "energy exchange", fraction=fraction, peak_offset_frac=worst,
            n_peaks=len(maxima))


def test_criterion_04_quantum_sector_structure():
    traj = builtin_scenarios()["fig2-quantum"].run()
    recs = _records(traj)
    t = np.array([r["t"] for r in recs])

    coupling = max(abs(r["ZRr"]) for r in recs)
    assert coupling <= 1e-10

    var_R = np.array([r["ZRR"] for r in recs])
    coeffs = np.polyfit(t, var_R, 2)
    residual = float(np.max(np.abs(np.polyval(coeffs, t) - var_R)) / var_R.max())
    assert residual < 1e-9

    e_cm = np.array([r["ER"] for r in recs])
    e_int = np.array([r["EI"] for r in recs])
    cm_drift = float(np.max(np.abs(e_cm - e_cm[0])) / abs(e_cm[0]))
    int_drift = float(np.max(np.abs(e_int - e_int[0])) / abs(e_int[0]))
    assert cm_drift <= 1e-8 and int_drift <= 1e-8
    _report(4, "quantum sector", ZRr_max=float(coupling), quad_residual=residual,
            ER_drift=cm_drift, EI_drift=int_drift)


def test_criterion_05_hybrid_coupling_grows(dense_fig4):
    recs = _records(dense_fig4)
    z_c = np.array([r["ZRr"] for r in recs])
    assert np.max(np.abs(z_c)) > 0.1  # a genuinely nonzero oscillation

    extrema = _local_extrema(z_c)
    assert len(extrema) >= 4
    values = z_c[extrema]
    # alternating oscillation whose positive and negative envelopes both grow
    signs = np.sign(values)
    assert np.all(signs[1:] != signs[:-1])
    for sign in (1.0, -1.0):
        branch = [abs(v) for v in values if np.sign(v) == sign]
        assert len(branch) >= 2
        assert all(b > a for a, b in zip(branch, branch[1:]))
    _report(5, "hybrid coupling growth", extrema=[round(float(v), 4) for v in values])


def test_criterion_06_mass_ratio_ordering():
    def exchange_fraction(name):
        traj = builtin_scenarios()[name].run()
        recs = _records(traj)
        e_cm = np.array([r["ER"] for r in recs])
        return float((e_cm.max() - e_cm.min()) / recs[0]["Etot"])

    dominant_quantum = exchange_fraction("fig5b")   # m_q = 20 m_x
    equal = exchange_fraction("fig4")
    dominant_classical = exchange_fraction("fig5a")  # m_x = 20 m_q
    assert dominant_quantum > equal > dominant_classical
    _report(6, "mass-ratio ordering", dominant_quantum=dominant_quantum,
            equal=equal, dominant_classical=dominant_classical)


def test_criterion_07_oracle_equivalence():
    # quantum ODE covariances vs the analytic Gaussian oracle
    traj = builtin_scenarios()["fig2-quantum"].run()
    T = cm_transform(traj.params)
    cov_dev = 0.0
    for s in traj.samples:
        ref = quantum_analytic_covariance(traj.samples[0], traj.params, s.t)
        got = transform_covariance(s.K, T)
        cov_dev = max(cov_dev, float(np.max(np.abs(got.as_array() - ref.as_array()))))
    assert cov_dev < 1e-8

    # integrated means vs the closed form
    sc = Scenario(name="means", sector="hybrid", mass_ratio=1.0, Lxx=0.5,
                  alpha_q=0.3, alpha_x=-0.2, beta_q=0.1, beta_x=0.05)
    mtraj = sc.run()
    consts = fit_mean_constants(mtraj.samples[0].alpha, mtraj.samples[0].beta, mtraj.params)
    mean_dev = 0.0
    for s in mtraj.samples:
        alpha_ref, beta_ref = analytic_mean(consts, mtraj.params, s.t)
        mean_dev = max(mean_dev, float(np.max(np.abs(s.alpha - alpha_ref))),
                       float(np.max(np.abs(s.beta - beta_ref))))
    assert mean_dev < 1e-9

    # classical moments stay finite at T/4 while the K/L path fails there
    cls = Scenario(name="classical", sector="classical", mass_ratio=1.0)
    params = cls.params()
    state0 = cls.initial_state()
    quarter = 0.25 * params.period
    moments = classical_moment_propagate(moments_from_state(state0, params), params, quarter)
    assert np.all(np.isfinite(moments.cov))
    with pytest.raises(PositiveDefinitenessLost) as err:
        integrate(state0, params, params.period)
    assert abs(err.value.t - quarter) < 0.01 * params.period
    _report(7, "oracle equivalence", covariance_dev=cov_dev, mean_dev=mean_dev,
            singularity_t=float(err.value.t), quarter_period=quarter)


def test_criterion_08_pde_cross_validation(pde_results):
    r = pde_results
    for name in ("quantum-covariance-vs-ode", "hybrid-ER-vs-ode",
                 "quantum-covariance-fine", "hybrid-ER-fine"):
        assert r[name].passed, r[name].line()
    conv = r["refinement-convergence"]
    assert conv.passed, conv.line()
    _report(8, "pde cross-validation",
            quantum_dev=r["quantum-covariance-vs-ode"].deviation,
            hybrid_ER_dev=r["hybrid-ER-vs-ode"].deviation,
            refinement_factor=conv.deviation)


def test_criterion_09_pde_conservation(pde_results):
    r = pde_results
    for name in ("norm-conservation", "energy-conservation",
                 "norm-conservation-fine", "energy-conservation-fine"):
        assert r[name].passed, r[name].line()
    _report(9, "pde conservation",
            norm_drift=r["norm-conservation"].deviation,
            energy_drift=r["energy-conservation"].deviation)


def test_criterion_10_run_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "fig4", "--out", str(out_a)]) == 0
    assert main(["run", "fig4", "--out", str(out_b)]) == 0
    for name in ("trajectory.csv", "energies.csv", "ellipses.csv", "manifest.json"):
        assert filecmp.cmp(out_a / name, out_b / name, shallow=False), name
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    _report(10, "byte-identical reruns", files=4)
