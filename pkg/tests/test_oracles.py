import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridosc import (
    GaussianEnsembleState,
    ModelParams,
    PreconditionViolated,
    SectorKind,
    SymMat2,
    classical_flow,
    classical_moment_propagate,
    cm_transform,
    hybrid_consistency_check,
    integrate,
    moments_from_state,
    quantum_analytic_covariance,
    transform_covariance,
)
from hybridosc.oracles import PhaseSpaceMoments
from hybridosc.scenarios import Scenario, builtin_scenarios

from conftest import random_spd

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def quantum_params():
    return ModelParams(2.0, 2.0, 1.0, sector=SectorKind.QUANTUM)


class TestQuantumAnalytic:
    def test_free_cm_spreading(self, quantum_params):
        p = quantum_params
        s0 = GaussianEnsembleState(0.0, SymMat2.identity(), SymMat2.zero(), (0, 0), (0, 0))
        T = p.period
        var0 = quantum_analytic_covariance(s0, p, 0.0).a_qq
        varT = quantum_analytic_covariance(s0, p, T).a_qq
        # free Gaussian: Var(R)(T) - Var(R)(0) = hbar^2 T^2 / (4 M^2 Var(R)(0))
        assert varT - var0 == pytest.approx(T**2 / (4.0 * p.total_mass**2 * var0), rel=1e-12)

    def test_coherent_relative_width_is_stationary(self, quantum_params):
        p = quantum_params
        # K' = diag(2 kappa, kappa/2) for K = kappa I; kappa = 4 puts the
        # relative mode at the stationary width Var(r) = hbar/(2 mu omega)
        s0 = GaussianEnsembleState(0.0, SymMat2.diagonal(4.0, 4.0), SymMat2.zero(), (0, 0), (0, 0))
        want = p.hbar / (2.0 * p.reduced_mass * p.omega)
        for t in np.linspace(0.0, 2.0 * p.period, 9):
            out = quantum_analytic_covariance(s0, p, float(t))
            assert out.a_xx == pytest.approx(want, rel=1e-12)
            assert out.a_qx == 0.0

    def test_matches_integration(self, quantum_trajectory):
        traj = quantum_trajectory
        T = cm_transform(traj.params)
        dev = 0.0
        for s in traj.samples:
            ref = quantum_analytic_covariance(traj.samples[0], traj.params, s.t)
            got = transform_covariance(s.K, T)
            dev = max(dev, float(np.max(np.abs(got.as_array() - ref.as_array()))))
        assert dev < 1e-8

    def test_rejects_wrong_sector(self, fig4_state, equal_mass_params):
        with pytest.raises(PreconditionViolated):
            quantum_analytic_covariance(fig4_state, equal_mass_params, 1.0)

    def test_rejects_frame_coupled_data(self, quantum_params):
        # equal-mass frame-diagonality needs K symmetric under q <-> x;
        # unequal diagonal entries break it
        s0 = GaussianEnsembleState(0.0, SymMat2(2.0, 0.3, 1.0), SymMat2.zero(), (0, 0), (0, 0))
        with pytest.raises(PreconditionViolated):
            quantum_analytic_covariance(s0, quantum_params, 1.0)


class TestClassicalMoments:
    def test_time_zero_is_identity(self, equal_mass_params):
        rng = np.random.default_rng(7)
        cov = np.eye(4) + 0.1 * np.diag(rng.uniform(size=4))
        m0 = PhaseSpaceMoments(mean=rng.uniform(size=4), cov=cov)
        out = classical_moment_propagate(m0, equal_mass_params, 0.0)
        np.testing.assert_allclose(out.mean, m0.mean, atol=1e-15)
        np.testing.assert_allclose(out.cov, m0.cov, atol=1e-15)

    def test_free_particle_second_moments(self):
        p = ModelParams(m_q=1.0, m_x=2.0, k=0.0, sector=SectorKind.CLASSICAL)
        cov = np.diag([1.0, 1.5, 0.3, 0.4])
        cov[1, 3] = cov[3, 1] = 0.2  # Cov(x, p_x)
        m0 = PhaseSpaceMoments(mean=np.zeros(4), cov=cov)
        t = 1.7
        out = classical_moment_propagate(m0, p, t)
        want = 1.5 + 2.0 * 0.2 * t / p.m_x + 0.4 * t**2 / p.m_x**2
        assert out.cov[1, 1] == pytest.approx(want, rel=1e-12)

    def test_finite_at_quarter_period(self, equal_mass_params):
        sc = Scenario(name="c", sector="classical", mass_ratio=1.0)
        p = sc.params()
        m0 = moments_from_state(sc.initial_state(), p)
        out = classical_moment_propagate(m0, p, 0.25 * p.period)
        assert np.all(np.isfinite(out.cov))
        # the relative coordinate focuses: Var(r(T/4)) collapses to zero
        var_r = out.cov[0, 0] + out.cov[1, 1] - 2.0 * out.cov[0, 1]
        assert var_r == pytest.approx(0.0, abs=1e-12)

    @given(seeds, st.floats(0.1, 12.0))
    def test_mode_block_determinants_invariant(self, seed, t):
        rng = np.random.default_rng(seed)
        p = ModelParams(*rng.uniform(0.5, 4.0, size=2), k=float(rng.uniform(0.2, 3.0)),
                        sector=SectorKind.CLASSICAL)
        A = rng.uniform(-1.0, 1.0, size=(4, 4))
        cov0 = A @ A.T + 0.5 * np.eye(4)
        m0 = PhaseSpaceMoments(mean=np.zeros(4), cov=cov0)
        out = classical_moment_propagate(m0, p, float(t))

        S = np.zeros((4, 4))
        M = p.total_mass
        S[0, :2] = [p.m_q / M, p.m_x / M]
        S[1, :2] = [1.0, -1.0]
        S[2, 2:] = [1.0, 1.0]
        S[3, 2:] = [p.m_x / M, -p.m_q / M]
        for idx in ([0, 2], [1, 3]):  # (R, p_R) and (r, p_r) blocks
            block0 = (S @ cov0 @ S.T)[np.ix_(idx, idx)]
            blockt = (S @ out.cov @ S.T)[np.ix_(idx, idx)]
            assert np.linalg.det(blockt) == pytest.approx(np.linalg.det(block0), rel=1e-9)

    def test_flow_is_symplectic(self, equal_mass_params):
        J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
        Phi = classical_flow(equal_mass_params, 2.3)
        np.testing.assert_allclose(Phi.T @ J @ Phi, J, atol=1e-12)


class TestMomentsFromState:
    def test_classical_blocks(self, fig4_state):
        p = ModelParams(2.0, 2.0, 1.0, sector=SectorKind.CLASSICAL)
        m = moments_from_state(fig4_state, p)
        Z = fig4_state.K.inverse().as_array()
        L = fig4_state.L.as_array()
        np.testing.assert_allclose(m.cov[:2, :2], Z)
        np.testing.assert_allclose(m.cov[:2, 2:], Z @ L)
        np.testing.assert_allclose(m.cov[2:, 2:], L @ Z @ L)

    def test_quantum_momentum_floor(self, fig4_state):
        p = ModelParams(2.0, 2.0, 1.0, sector=SectorKind.QUANTUM)
        m = moments_from_state(fig4_state, p)
        L = fig4_state.L.as_array()
        Z = fig4_state.K.inverse().as_array()
        np.testing.assert_allclose(m.cov[2:, 2:], L @ Z @ L + 0.25 * fig4_state.K.as_array())


class TestConsistencyCheck:
    def test_quantum_report(self, quantum_trajectory):
        rep = hybrid_consistency_check(quantum_trajectory)
        assert rep.oracle == "quantum-analytic"
        assert rep.max_covariance_dev < 1e-8
        assert rep.energy_drift < 1e-8

    def test_classical_window_report(self):
        sc = Scenario(name="c", sector="classical", mass_ratio=1.0)
        p = sc.params()
        window = p.period / 8.0
        traj = integrate(sc.initial_state(), p, window, np.linspace(0.0, window, 17))
        rep = hybrid_consistency_check(traj)
        assert rep.oracle == "classical-moments"
        assert rep.max_covariance_dev < 1e-6

    def test_hybrid_has_no_oracle(self, fig4_trajectory):
        rep = hybrid_consistency_check(fig4_trajectory)
        assert rep.oracle == "none"
        assert rep.max_covariance_dev is None
        assert rep.energy_drift < 1e-8
        assert rep.momentum_drift < 1e-12
