"""Domain types and constant matrices of the coupled two-particle model.

Everything here is an immutable value type.  The engine works in the
nondimensional system (lengths in units of the oscillator length x0,
times scaled by the relative-mode frequency, energies in hbar*omega),
but nothing below assumes it: ModelParams accepts raw values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import SingularMatrix


class SectorKind(Enum):
    """Which coordinates carry the quantum-potential term."""

    HYBRID = "hybrid"
    QUANTUM = "quantum"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class SymMat2:
    """2x2 real symmetric matrix stored as its three independent entries.

    Symmetry holds by construction.  Positive definiteness is not an
    invariant of the type; it is checked where required (K, Z).
    """

    a_qq: float
    a_qx: float
    a_xx: float

    @classmethod
    def identity(cls) -> "SymMat2":
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def zero(cls) -> "SymMat2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def diagonal(cls, d_qq: float, d_xx: float) -> "SymMat2":
        return cls(float(d_qq), 0.0, float(d_xx))

    @classmethod
    def from_array(cls, a) -> "SymMat2":
        """Build from a 2x2 array, averaging away float asymmetry."""
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), 0.5 * (float(a[0, 1]) + float(a[1, 0])), float(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a_qq, self.a_qx], [self.a_qx, self.a_xx]])

    @property
    def trace(self) -> float:
        return self.a_qq + self.a_xx

    @property
    def det(self) -> float:
        return self.a_qq * self.a_xx - self.a_qx * self.a_qx

    def eigenvalues(self) -> tuple[float, float]:
        """Closed-form eigenvalues, returned (low, high)."""
        mid = 0.5 * (self.a_qq + self.a_xx)
        gap = math.hypot(0.5 * (self.a_qq - self.a_xx), self.a_qx)
        return mid - gap, mid + gap

    def is_positive_definite(self) -> bool:
        return self.a_qq > 0.0 and self.det > 0.0

    def inverse(self) -> "SymMat2":
        """Closed-form inverse; raises SingularMatrix for det <= 0."""
        d = self.det
        if d <= 0.0 or not math.isfinite(d):
            raise SingularMatrix(f"2x2 inverse requested with det={d!r}")
        return SymMat2(self.a_xx / d, -self.a_qx / d, self.a_qq / d)

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.array(
            [self.a_qq * v[0] + self.a_qx * v[1], self.a_qx * v[0] + self.a_xx * v[1]]
        )

    def scaled(self, c: float) -> "SymMat2":
        return SymMat2(c * self.a_qq, c * self.a_qx, c * self.a_xx)

    def __add__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(
            self.a_qq + other.a_qq, self.a_qx + other.a_qx, self.a_xx + other.a_xx
        )

    def __sub__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(
            self.a_qq - other.a_qq, self.a_qx - other.a_qx, self.a_xx - other.a_xx
        )


@dataclass(frozen=True)
class ModelParams:
    """Masses, spring constant and hbar; fixes U, C and the sector projector.

    m_q is the quantum particle's mass, m_x the classical one's.  k >= 0
    couples them harmonically; k = 0 means free particles.
    """

    m_q: float
    m_x: float
    k: float = 1.0
    hbar: float = 1.0
    sector: SectorKind = SectorKind.HYBRID

    def __post_init__(self):
        if not (self.m_q > 0.0 and math.isfinite(self.m_q)):
            raise ValueError(f"m_q must be positive and finite, got {self.m_q!r}")
        if not (self.m_x > 0.0 and math.isfinite(self.m_x)):
            raise ValueError(f"m_x must be positive and finite, got {self.m_x!r}")
        if not (self.k >= 0.0 and math.isfinite(self.k)):
            raise ValueError(f"k must be non-negative and finite, got {self.k!r}")
        if not (self.hbar > 0.0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar!r}")

    @property
    def total_mass(self) -> float:
        return self.m_q + self.m_x

    @property
    def reduced_mass(self) -> float:
        return self.m_q * self.m_x / (self.m_q + self.m_x)

    @property
    def omega(self) -> float:
        """Relative-mode frequency sqrt(k/mu); zero for k = 0."""
        return math.sqrt(self.k / self.reduced_mass)

    @property
    def oscillator_length(self) -> float:
        if self.k <= 0.0:
            raise ValueError("oscillator length is undefined for k = 0")
        return math.sqrt(self.hbar / (self.reduced_mass * self.omega))

    @property
    def period(self) -> float:
        if self.k <= 0.0:
            raise ValueError("period is undefined for k = 0")
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class GaussianEnsembleState:
    """Complete dynamical state of the Gaussian/quadratic ansatz.

    K is the inverse position covariance (must stay symmetric positive
    definite whenever a state is exposed); L is the phase curvature;
    alpha/beta are the mean position/momentum; sigma is carried along
    but never evolved.
    """

    t: float
    K: SymMat2
    L: SymMat2
    alpha: np.ndarray
    beta: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).reshape(2)
        b = np.array(self.beta, dtype=float).reshape(2)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        lo, hi = self.K.eigenvalues()
        if not (lo > 0.0 and math.isfinite(hi)):
            raise ValueError(f"K must be positive definite, eigenvalues=({lo!r}, {hi!r})")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("alpha and beta must be finite")


@dataclass(frozen=True)
class MeanMotionConstants:
    """Parameters (a, b, c, phi) of the closed-form mean motion."""

    a: float
    b: float
    c: float
    phi: float


def build_U(params: ModelParams) -> SymMat2:
    """Inverse-mass matrix diag(1/m_q, 1/m_x)."""
    return SymMat2.diagonal(1.0 / params.m_q, 1.0 / params.m_x)


def build_C(params: ModelParams) -> SymMat2:
    """Harmonic coupling matrix k * [[1, -1], [-1, 1]]."""
    return SymMat2(params.k, -params.k, params.k)


def build_E(sector: SectorKind) -> SymMat2:
    """Sector projector selecting the quantum coordinates."""
    if sector is SectorKind.HYBRID:
        return SymMat2.diagonal(1.0, 0.0)
    if sector is SectorKind.QUANTUM:
        return SymMat2.identity()
    if sector is SectorKind.CLASSICAL:
        return SymMat2.zero()
    raise ValueError(f"unknown sector {sector!r}")
