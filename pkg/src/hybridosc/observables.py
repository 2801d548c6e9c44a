"""Derived quantities: covariances, frame transforms, energies, ellipses.

All functions are pure; momentum covariances follow

    Cov(p) = L Z L + (hbar^2/4) E K E,      Z = K^{-1}

with E the sector projector, so the quantum-potential momentum floor
appears only on quantum coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GaussianEnsembleState, ModelParams, SymMat2, build_E
from .errors import SingularMatrix


@dataclass(frozen=True)
class EnergyReport:
    """Energy decomposition of a state.

    E_total = E_R + E_r + V holds by construction; E_I = E_r + V.
    With include_classical_motion False the mean-motion (alpha, beta)
    contributions are excluded, matching how the reference runs report
    energies.
    """

    E_R: float
    E_r: float
    V: float
    p_R: float
    include_classical_motion: bool

    @property
    def E_I(self) -> float:
        return self.E_r + self.V

    @property
    def E_total(self) -> float:
        return self.E_R + self.E_r + self.V


@dataclass(frozen=True)
class EllipseSpec:
    """Error ellipse of a position covariance matrix.

    semi_axes is (major, minor); angle is the major-axis angle from the
    q-axis, in (-pi/2, pi/2], with isotropic ties resolved to 0.
    """

    center: np.ndarray
    semi_axes: tuple[float, float]
    angle: float


@dataclass(frozen=True)
class ProductMoments:
    """The two mixed classical-quantum product expectations."""

    qx_mean: float
    pqpx_mean: float


def position_covariance(K: SymMat2) -> SymMat2:
    """Z = K^{-1} via the closed-form 2x2 inverse; K must be SPD."""
    if not K.is_positive_definite():
        raise SingularMatrix(f"K is not positive definite: det={K.det!r}, K_qq={K.a_qq!r}")
    return K.inverse()


def momentum_covariance(K: SymMat2, L: SymMat2, E: SymMat2, hbar: float) -> SymMat2:
    """L K^{-1} L + (hbar^2/4) E K E."""
    Z = K.inverse().as_array()
    La = L.as_array()
    Ea = E.as_array()
    cov = La @ Z @ La + 0.25 * hbar * hbar * (Ea @ K.as_array() @ Ea)
    return SymMat2.from_array(cov)


def cm_transform(params: ModelParams) -> np.ndarray:
    """Matrix T with (q, x)^T = T (R, r)^T."""
    M = params.total_mass
    return np.array([[1.0, params.m_x / M], [1.0, -params.m_q / M]])


def transform_covariance(K: SymMat2, T) -> SymMat2:
    """Covariance in the transformed frame, (T^T K T)^{-1}."""
    T = np.asarray(T, dtype=float)
    Kp = SymMat2.from_array(T.T @ K.as_array() @ T)
    return Kp.inverse()


def energies(
    state: GaussianEnsembleState,
    params: ModelParams,
    include_classical_motion: bool = False,
) -> EnergyReport:
    """Center-of-mass kinetic, relative kinetic and potential energies.

    Fluctuation parts come from the momentum/position covariances; the
    flag adds the mean-motion terms (<p>-squared kinetic pieces and the
    (k/2)(alpha_q - alpha_x)^2 potential piece).
    """
    E = build_E(params.sector)
    Pi = momentum_covariance(state.K, state.L, E, params.hbar)
    Z = position_covariance(state.K)
    M = params.total_mass
    mq, mx = params.m_q, params.m_x

    pq2 = Pi.a_qq
    px2 = Pi.a_xx
    pqpx = Pi.a_qx
    if include_classical_motion:
        pq2 += state.beta[0] ** 2
        px2 += state.beta[1] ** 2
        pqpx += state.beta[0] * state.beta[1]

    e_cm = (pq2 + px2 + 2.0 * pqpx) / (2.0 * M)
    e_rel = ((mx / mq) * pq2 + (mq / mx) * px2 - 2.0 * pqpx) / (2.0 * M)
    # <(q-x)^2> = Var(q) + Var(x) - 2 Cov(q,x) [+ mean-difference term]
    spread = Z.a_qq + Z.a_xx - 2.0 * Z.a_qx
    if include_classical_motion:
        spread += (state.alpha[0] - state.alpha[1]) ** 2
    v = 0.5 * params.k * spread

    return EnergyReport(
        E_R=e_cm,
        E_r=e_rel,
        V=v,
        p_R=state.beta[0] + state.beta[1],
        include_classical_motion=include_classical_motion,
    )


def error_ellipse(Z: SymMat2, center=(0.0, 0.0)) -> EllipseSpec:
    """Closed-form eigendecomposition of an SPD covariance matrix."""
    lo, hi = Z.eigenvalues()
    if lo <= 0.0:
        raise SingularMatrix(f"error ellipse needs SPD Z, eigenvalues=({lo!r}, {hi!r})")
    off = Z.a_qx
    diff = Z.a_qq - Z.a_xx
    if off == 0.0 and diff == 0.0:
        angle = 0.0
    else:
        angle = 0.5 * math.atan2(2.0 * off, diff)
        if angle <= -0.5 * math.pi:
            angle += math.pi
    return EllipseSpec(
        center=np.array(center, dtype=float),
        semi_axes=(math.sqrt(hi), math.sqrt(lo)),
        angle=angle,
    )


def product_moments(state: GaussianEnsembleState, params: ModelParams) -> ProductMoments:
    """<qx> and <p_q p_x> including the mean contributions."""
    Z = position_covariance(state.K)
    E = build_E(params.sector)
    Pi = momentum_covariance(state.K, state.L, E, params.hbar)
    return ProductMoments(
        qx_mean=Z.a_qx + state.alpha[0] * state.alpha[1],
        pqpx_mean=Pi.a_qx + state.beta[0] * state.beta[1],
    )


def cm_coupling_energy(state: GaussianEnsembleState, params: ModelParams) -> float:
    """Diagnostic coupling term -(hbar^2/4M) K'_Rr in the CM/relative frame.

    Vanishes identically along quantum-sector evolutions started with a
    frame-diagonal K; nonzero in general for the hybrid sector.  Only
    this zero/nonzero structure is verified anywhere.
    """
    T = cm_transform(params)
    Kp = SymMat2.from_array(T.T @ state.K.as_array() @ T)
    return -(params.hbar ** 2) / (4.0 * params.total_mass) * Kp.a_qx


def sample_record(
    state: GaussianEnsembleState,
    params: ModelParams,
    include_classical_motion: bool = False,
) -> dict:
    """Flat record of everything the trajectory tables report."""
    Z = position_covariance(state.K)
    Zp = transform_covariance(state.K, cm_transform(params))
    rep = energies(state, params, include_classical_motion)
    return {
        "t": state.t,
        "Zqq": Z.a_qq,
        "Zxx": Z.a_xx,
        "Zqx": Z.a_qx,
        "ZRR": Zp.a_qq,
        "Zrr": Zp.a_xx,
        "ZRr": Zp.a_qx,
        "ER": rep.E_R,
        "Er": rep.E_r,
        "V": rep.V,
        "EI": rep.E_I,
        "Etot": rep.E_total,
        "pR": rep.p_R,
        "alpha_q": state.alpha[0],
        "alpha_x": state.alpha[1],
        "beta_q": state.beta[0],
        "beta_x": state.beta[1],
    }
