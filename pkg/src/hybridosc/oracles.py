"""Independent reference solutions used to cross-check the ODE engine.

Two oracles:

* quantum_analytic_covariance: the quantum sector decouples in
  center-of-mass/relative coordinates into a free Gaussian mode (mass M)
  and a harmonic Gaussian mode (mass mu, frequency omega); both have
  closed-form variance evolutions.

* classical_moment_propagate: first and second phase-space moments of
  the classical ensemble propagate through the exact linear symplectic
  flow of the coupled-oscillator Hamiltonian.  This stays finite at the
  quarter-period where the classical K/L matrices blow up, and is the
  normative classical solution.

Neither oracle exists for the hybrid sector; hybrid runs are checked
through conservation laws only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GaussianEnsembleState, ModelParams, SectorKind, SymMat2, build_E
from .dynamics import Trajectory
from .errors import PreconditionViolated
from .observables import (
    cm_transform,
    energies,
    momentum_covariance,
    position_covariance,
    transform_covariance,
)

_DIAG_TOL = 1e-12


@dataclass(frozen=True)
class PhaseSpaceMoments:
    """Mean (q, x, p_q, p_x) and its 4x4 symmetric covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(4)
        cov = np.asarray(self.cov, dtype=float).reshape(4, 4)
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        pos = cov[:2, :2]
        # semidefinite within tolerance: a focused classical ensemble has a
        # genuinely singular position block at quarter-periods
        floor = -1e-12 * max(1.0, float(np.max(np.abs(pos))))
        if float(np.linalg.eigvalsh(pos)[0]) < floor:
            raise ValueError("position block must be positive semidefinite")


def moments_from_state(state: GaussianEnsembleState, params: ModelParams) -> PhaseSpaceMoments:
    """Phase-space moments of the Gaussian ensemble.

    Position block Z = K^{-1}, cross block Z L (the phase-gradient
    correlation), momentum block L Z L + (hbar^2/4) E K E with the
    sector's projector, so classical states carry no quantum momentum
    floor.
    """
    Z = position_covariance(state.K).as_array()
    La = state.L.as_array()
    cross = Z @ La
    mom = momentum_covariance(state.K, state.L, build_E(params.sector), params.hbar).as_array()
    cov = np.block([[Z, cross], [cross.T, mom]])
    mean = np.concatenate([state.alpha, state.beta])
    return PhaseSpaceMoments(mean=mean, cov=cov)


def _mode_flow(mass: float, omega: float, t: float) -> np.ndarray:
    """2x2 symplectic flow of one mode: free for omega = 0, harmonic else."""
    if omega == 0.0:
        return np.array([[1.0, t / mass], [0.0, 1.0]])
    th = omega * t
    return np.array(
        [[math.cos(th), math.sin(th) / (mass * omega)],
         [-mass * omega * math.sin(th), math.cos(th)]]
    )


def _frame_change(params: ModelParams) -> np.ndarray:
    """4x4 map (q, x, p_q, p_x) -> (R, r, p_R, p_r)."""
    M = params.total_mass
    S = np.zeros((4, 4))
    S[0, 0] = params.m_q / M
    S[0, 1] = params.m_x / M
    S[1, 0] = 1.0
    S[1, 1] = -1.0
    S[2, 2] = 1.0
    S[2, 3] = 1.0
    S[3, 2] = params.m_x / M
    S[3, 3] = -params.m_q / M
    return S


def classical_flow(params: ModelParams, t: float) -> np.ndarray:
    """Exact 4x4 fundamental matrix of the coupled-oscillator flow."""
    S = _frame_change(params)
    cm = _mode_flow(params.total_mass, 0.0, t)
    rel = _mode_flow(params.reduced_mass, params.omega, t)
    # prime-frame ordering (R, r, p_R, p_r): modes do not mix
    Phi_p = np.zeros((4, 4))
    Phi_p[np.ix_([0, 2], [0, 2])] = cm
    Phi_p[np.ix_([1, 3], [1, 3])] = rel
    return np.linalg.solve(S, Phi_p @ S)


def classical_moment_propagate(
    m0: PhaseSpaceMoments, params: ModelParams, t: float
) -> PhaseSpaceMoments:
    """Propagate moments by the linear symplectic flow over time t."""
    Phi = classical_flow(params, t)
    return PhaseSpaceMoments(mean=Phi @ m0.mean, cov=Phi @ m0.cov @ Phi.T)


def quantum_analytic_covariance(
    state0: GaussianEnsembleState, params: ModelParams, t: float
) -> SymMat2:
    """Closed-form Z'(t) in the CM/relative frame for the quantum sector.

    Requires the initial K and L to be diagonal in the CM/relative frame
    (true for every equal-mass reference scenario).  Var(R) follows the
    free-particle Gaussian law, Var(r) the squeezed-oscillator law, and
    Cov(R, r) stays exactly zero.
    """
    if params.sector is not SectorKind.QUANTUM:
        raise PreconditionViolated("analytic covariance oracle applies to the quantum sector")
    T = cm_transform(params)
    Kp = SymMat2.from_array(T.T @ state0.K.as_array() @ T)
    Lp = SymMat2.from_array(T.T @ state0.L.as_array() @ T)
    k_scale = max(abs(Kp.a_qq), abs(Kp.a_xx))
    l_scale = max(abs(Lp.a_qq), abs(Lp.a_xx), k_scale)
    if abs(Kp.a_qx) > _DIAG_TOL * k_scale or abs(Lp.a_qx) > _DIAG_TOL * l_scale:
        raise PreconditionViolated(
            "initial K and L must be diagonal in the CM/relative frame"
        )

    hbar = params.hbar
    elapsed = t - state0.t

    def mode_variance(z0, l0, mass, omega):
        # 2x2 mode covariance [[z, z l], [z l, l^2 z + hbar^2/(4z)]]
        # pushed through the mode flow; position entry only.
        var_p = l0 * l0 * z0 + hbar * hbar / (4.0 * z0)
        f = _mode_flow(mass, omega, elapsed)
        return (
            f[0, 0] * f[0, 0] * z0
            + 2.0 * f[0, 0] * f[0, 1] * z0 * l0
            + f[0, 1] * f[0, 1] * var_p
        )

    z_R = 1.0 / Kp.a_qq
    z_r = 1.0 / Kp.a_xx
    var_R = mode_variance(z_R, Lp.a_qq, params.total_mass, 0.0)
    var_r = mode_variance(z_r, Lp.a_xx, params.reduced_mass, params.omega)
    return SymMat2.diagonal(var_R, var_r)


@dataclass(frozen=True)
class ConsistencyReport:
    """Maximum deviations of a trajectory from its sector's oracle."""

    sector: SectorKind
    oracle: str                      # "quantum-analytic", "classical-moments", "none"
    max_covariance_dev: float | None
    energy_drift: float              # relative E_total drift over the samples
    momentum_drift: float            # absolute p_R drift


def hybrid_consistency_check(traj: Trajectory, params: ModelParams | None = None) -> ConsistencyReport:
    """Compare a trajectory against whatever oracle its sector admits.

    Quantum: Z'(t) against the analytic Gaussian evolution.  Classical
    (the hybrid RHS with the quantum-potential coefficient zeroed):
    Z(t) against symplectic moment propagation; callers should restrict
    the trajectory to a pre-singularity window.  Hybrid: no oracle
    exists; only the conservation numbers are reported.
    """
    params = params if params is not None else traj.params
    reports = [energies(s, params, include_classical_motion=True) for s in traj.samples]
    etot = np.array([r.E_total for r in reports])
    p_R = np.array([r.p_R for r in reports])
    scale = max(abs(etot[0]), 1e-300)
    energy_drift = float(np.max(np.abs(etot - etot[0])) / scale)
    momentum_drift = float(np.max(np.abs(p_R - p_R[0])))

    max_dev = None
    if params.sector is SectorKind.QUANTUM:
        oracle = "quantum-analytic"
        T = cm_transform(params)
        dev = 0.0
        for s in traj.samples:
            ref = quantum_analytic_covariance(traj.samples[0], params, s.t)
            got = transform_covariance(s.K, T)
            dev = max(dev, float(np.max(np.abs(got.as_array() - ref.as_array()))))
        max_dev = dev
    elif params.sector is SectorKind.CLASSICAL:
        oracle = "classical-moments"
        m0 = moments_from_state(traj.samples[0], params)
        dev = 0.0
        for s in traj.samples:
            ref = classical_moment_propagate(m0, params, s.t - traj.samples[0].t)
            got = position_covariance(s.K).as_array()
            dev = max(dev, float(np.max(np.abs(got - ref.cov[:2, :2]))))
        max_dev = dev
    else:
        oracle = "none"

    return ConsistencyReport(
        sector=params.sector,
        oracle=oracle,
        max_covariance_dev=max_dev,
        energy_drift=energy_drift,
        momentum_drift=momentum_drift,
    )
