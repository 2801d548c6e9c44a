"""Right-hand sides and time integration of the coupled matrix ODE system.

The state is (K, L, alpha, beta):

    dK/dt = -(K U L + L U K)
    dL/dt = -L U L - C + (hbar^2/4) K E U E K
    dalpha/dt = U beta,   dbeta/dt = -C alpha

K and L are carried as three scalars each, so symmetry is structural and
no re-symmetrization step is ever needed.  Positive definiteness of K is
monitored continuously by a terminal event; losing it raises
PositiveDefinitenessLost (the classical sector does this near every
quarter-period, which is expected and documented).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    GaussianEnsembleState,
    MeanMotionConstants,
    ModelParams,
    SymMat2,
    build_C,
    build_E,
    build_U,
)
from .errors import PositiveDefinitenessLost, StepSizeUnderflow

# K counts as numerically positive definite only while its smallest
# eigenvalue exceeds this fraction of the largest; below that the sign of
# the eigenvalue is not resolvable at the integration accuracy.
PD_REL_FLOOR = 1e-10

_ALLOWED_METHODS = ("RK45", "DOP853")


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive embedded Runge-Kutta settings."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    initial_step: float | None = None
    method: str = "RK45"

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be > 0")
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be > 0")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be > 0")
        if self.initial_step is not None and not self.initial_step > 0.0:
            raise ValueError("initial_step must be > 0")
        if self.method not in _ALLOWED_METHODS:
            raise ValueError(f"method must be one of {_ALLOWED_METHODS}")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples of the integrated state."""

    params: ModelParams
    samples: tuple[GaussianEnsembleState, ...]

    def __post_init__(self):
        times = self.times
        if len(times) >= 2 and not np.all(np.diff(times) > 0.0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def __len__(self) -> int:
        return len(self.samples)

    def records(self, include_classical_motion: bool = False) -> list[dict]:
        """Derived observable record per sample (covariances, energies)."""
        from .observables import sample_record

        return [sample_record(s, self.params, include_classical_motion) for s in self.samples]


def rhs_K(K: SymMat2, L: SymMat2, U: SymMat2) -> SymMat2:
    """-(K U L + L U K); symmetric by construction since L U K = (K U L)^T."""
    b = K.as_array() @ U.as_array() @ L.as_array()
    return SymMat2(-2.0 * b[0, 0], -(b[0, 1] + b[1, 0]), -2.0 * b[1, 1])


def rhs_L(K: SymMat2, L: SymMat2, U: SymMat2, C: SymMat2, E: SymMat2, hbar: float) -> SymMat2:
    """-L U L - C + (hbar^2/4) K E U E K."""
    Ua = U.as_array()
    lul = L.as_array() @ Ua @ L.as_array()
    Ea = E.as_array()
    keuek = K.as_array() @ Ea @ Ua @ Ea @ K.as_array()
    c = 0.25 * hbar * hbar
    return SymMat2(
        -lul[0, 0] - C.a_qq + c * keuek[0, 0],
        -0.5 * (lul[0, 1] + lul[1, 0]) - C.a_qx + 0.5 * c * (keuek[0, 1] + keuek[1, 0]),
        -lul[1, 1] - C.a_xx + c * keuek[1, 1],
    )


def rhs_mean(alpha, beta, U: SymMat2, C: SymMat2):
    """(dalpha/dt, dbeta/dt) = (U beta, -C alpha)."""
    return U.matvec(beta), -C.matvec(alpha)


def _pack(state: GaussianEnsembleState) -> np.ndarray:
    K, L = state.K, state.L
    return np.array(
        [K.a_qq, K.a_qx, K.a_xx, L.a_qq, L.a_qx, L.a_xx,
         state.alpha[0], state.alpha[1], state.beta[0], state.beta[1]]
    )


def _unpack(y):
    K = SymMat2(y[0], y[1], y[2])
    L = SymMat2(y[3], y[4], y[5])
    return K, L, y[6:8], y[8:10]


def default_output_times(params: ModelParams, t0: float, t_final: float,
                         samples_per_period: int = 64) -> np.ndarray:
    """Uniform sampling at samples_per_period per oscillation period.

    For k = 0 (no period) falls back to samples_per_period + 1 points
    over the whole span.
    """
    span = t_final - t0
    if params.k > 0.0:
        n = max(2, int(round(span / params.period * samples_per_period)) + 1)
    else:
        n = samples_per_period + 1
    return np.linspace(t0, t_final, n)


def integrate(
    state0: GaussianEnsembleState,
    params: ModelParams,
    t_final: float,
    output_times=None,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate the joint (K, L, alpha, beta) system and sample it.

    output_times must be sorted and lie within [state0.t, t_final];
    defaults to 64 samples per period.  Raises PositiveDefinitenessLost
    when K's smallest eigenvalue becomes numerically indistinguishable
    from zero, and StepSizeUnderflow if the stepper stalls.
    """
    cfg = cfg or IntegratorConfig()
    if output_times is None:
        output_times = default_output_times(params, state0.t, t_final)
    output_times = np.asarray(output_times, dtype=float)
    if output_times.size == 0:
        raise ValueError("output_times must be non-empty")
    if np.any(np.diff(output_times) <= 0.0):
        raise ValueError("output_times must be strictly increasing")
    if output_times[0] < state0.t or output_times[-1] > t_final:
        raise ValueError("output_times must lie within [state0.t, t_final]")

    U = build_U(params)
    C = build_C(params)
    E = build_E(params.sector)
    hbar = params.hbar

    def rhs(t, y):
        K, L, alpha, beta = _unpack(y)
        dK = rhs_K(K, L, U)
        dL = rhs_L(K, L, U, C, E, hbar)
        dalpha, dbeta = rhs_mean(alpha, beta, U, C)
        return (dK.a_qq, dK.a_qx, dK.a_xx, dL.a_qq, dL.a_qx, dL.a_xx,
                dalpha[0], dalpha[1], dbeta[0], dbeta[1])

    def pd_monitor(t, y):
        K = SymMat2(y[0], y[1], y[2])
        lo, hi = K.eigenvalues()
        return lo - PD_REL_FLOOR * abs(hi)

    pd_monitor.terminal = True
    pd_monitor.direction = -1

    sol = solve_ivp(
        rhs,
        (state0.t, t_final),
        _pack(state0),
        method=cfg.method,
        t_eval=output_times,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        first_step=cfg.initial_step,
        events=pd_monitor,
        dense_output=False,
    )

    if sol.status == 1:  # terminated by the PD event
        raise PositiveDefinitenessLost(float(sol.t_events[0][0]))
    if sol.status < 0:
        t_last = float(sol.t[-1]) if sol.t.size else state0.t
        raise StepSizeUnderflow(t_last, f"integration failed at t={t_last}: {sol.message}")

    samples = []
    for i, t in enumerate(sol.t):
        K, L, alpha, beta = _unpack(sol.y[:, i])
        # GaussianEnsembleState re-validates positive definiteness on exposure
        samples.append(GaussianEnsembleState(float(t), K, L, alpha, beta, state0.sigma))
    return Trajectory(params=params, samples=tuple(samples))


def analytic_mean(consts: MeanMotionConstants, params: ModelParams, t: float):
    """Closed-form (alpha(t), beta(t)) of the mean motion; requires k > 0."""
    if params.k <= 0.0:
        raise ValueError("closed-form mean motion requires k > 0")
    mu = params.reduced_mass
    w = params.omega
    ph = w * t + consts.phi
    cm = consts.a + consts.b * t
    alpha = np.array(
        [cm + consts.c * mu * math.cos(ph) / params.m_q,
         cm - consts.c * mu * math.cos(ph) / params.m_x]
    )
    osc = consts.c * mu * w * math.sin(ph)
    beta = np.array([consts.b * params.m_q - osc, consts.b * params.m_x + osc])
    return alpha, beta


def fit_mean_constants(alpha0, beta0, params: ModelParams) -> MeanMotionConstants:
    """Invert the closed form at t = 0; round-trips with analytic_mean."""
    if params.k <= 0.0:
        raise ValueError("closed-form mean motion requires k > 0")
    alpha0 = np.asarray(alpha0, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    M = params.total_mass
    mu = params.reduced_mass
    w = params.omega
    a = (params.m_q * alpha0[0] + params.m_x * alpha0[1]) / M
    b = (beta0[0] + beta0[1]) / M
    r0 = alpha0[0] - alpha0[1]
    pr0 = (params.m_x * beta0[0] - params.m_q * beta0[1]) / M
    # r(t) = c cos(w t + phi), p_r(t) = -c mu w sin(w t + phi)
    s = -pr0 / (mu * w)
    c = math.hypot(r0, s)
    phi = math.atan2(s, r0) if c > 0.0 else 0.0
    return MeanMotionConstants(a=a, b=b, c=c, phi=phi)
