"""Scenario definitions: a flat `key = value` text schema plus built-ins.

Recognized keys (all numbers in the nondimensional unit system of the
built-ins: lengths in x0, K entries in 1/x0^2, L entries in hbar/x0^2,
times in periods):

    name                    free-form label (default: file stem)
    sector                  hybrid | quantum | classical
    m_q, m_x                masses (exclusive with mass_ratio)
    mass_ratio              m_x / m_q at fixed reduced mass 1
    k, hbar                 coupling and action scale (defaults 1)
    Kqq, Kxx, Kqx           initial inverse covariance (defaults 1, 1, 0)
    Lqq, Lxx, Lqx           initial phase curvature (defaults 0)
    alpha_q, alpha_x        initial mean position (defaults 0)
    beta_q, beta_x          initial mean momentum (defaults 0)
    sigma                   inert phase offset (default 0)
    t_final_periods         run length in periods (default 2)
    samples_per_period      output cadence (default 64)
    include_classical_motion   true | false (default false)
    rel_tol, abs_tol        integrator overrides (optional)

Lines starting with '#' and blank lines are ignored.  Scenario runs are
fully deterministic; there is no seed anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .core import GaussianEnsembleState, ModelParams, SectorKind, SymMat2
from .dynamics import IntegratorConfig, Trajectory, default_output_times, integrate
from .errors import ConfigParse

_SECTORS = {
    "hybrid": SectorKind.HYBRID,
    "quantum": SectorKind.QUANTUM,
    "classical": SectorKind.CLASSICAL,
}


@dataclass(frozen=True)
class Scenario:
    """Fully resolved, deterministic description of one run."""

    name: str
    sector: str = "hybrid"
    m_q: float | None = None
    m_x: float | None = None
    mass_ratio: float | None = None
    k: float = 1.0
    hbar: float = 1.0
    Kqq: float = 1.0
    Kxx: float = 1.0
    Kqx: float = 0.0
    Lqq: float = 0.0
    Lxx: float = 0.0
    Lqx: float = 0.0
    alpha_q: float = 0.0
    alpha_x: float = 0.0
    beta_q: float = 0.0
    beta_x: float = 0.0
    sigma: float = 0.0
    t_final_periods: float = 2.0
    samples_per_period: int = 64
    include_classical_motion: bool = False
    rel_tol: float | None = None
    abs_tol: float | None = None

    def __post_init__(self):
        if self.sector not in _SECTORS:
            raise ConfigParse(
                f"sector must be one of {sorted(_SECTORS)}, got {self.sector!r}", key="sector"
            )
        has_masses = self.m_q is not None or self.m_x is not None
        if self.mass_ratio is not None and has_masses:
            raise ConfigParse("mass_ratio is exclusive with m_q/m_x", key="mass_ratio")
        if has_masses and (self.m_q is None or self.m_x is None):
            raise ConfigParse("m_q and m_x must be given together", key="m_q")
        if self.samples_per_period < 1:
            raise ConfigParse("samples_per_period must be >= 1", key="samples_per_period")
        if not self.t_final_periods > 0.0:
            raise ConfigParse("t_final_periods must be > 0", key="t_final_periods")

    def resolved_masses(self) -> tuple[float, float]:
        if self.m_q is not None:
            return self.m_q, self.m_x
        ratio = 1.0 if self.mass_ratio is None else self.mass_ratio
        # ratio = m_x/m_q at reduced mass 1: m_q = (1 + r)/r, m_x = 1 + r
        return (1.0 + ratio) / ratio, 1.0 + ratio

    def params(self) -> ModelParams:
        m_q, m_x = self.resolved_masses()
        return ModelParams(
            m_q=m_q, m_x=m_x, k=self.k, hbar=self.hbar, sector=_SECTORS[self.sector]
        )

    def initial_state(self) -> GaussianEnsembleState:
        return GaussianEnsembleState(
            t=0.0,
            K=SymMat2(self.Kqq, self.Kqx, self.Kxx),
            L=SymMat2(self.Lqq, self.Lqx, self.Lxx),
            alpha=(self.alpha_q, self.alpha_x),
            beta=(self.beta_q, self.beta_x),
            sigma=self.sigma,
        )

    def integrator_config(self) -> IntegratorConfig:
        kw = {}
        if self.rel_tol is not None:
            kw["rel_tol"] = self.rel_tol
        if self.abs_tol is not None:
            kw["abs_tol"] = self.abs_tol
        return IntegratorConfig(**kw)

    def run(self) -> Trajectory:
        params = self.params()
        state0 = self.initial_state()
        t_final = self.t_final_periods * params.period
        times = default_output_times(params, 0.0, t_final, self.samples_per_period)
        return integrate(state0, params, t_final, times, self.integrator_config())

    def resolved_items(self) -> dict:
        """Every field with defaults filled in, for the run manifest."""
        m_q, m_x = self.resolved_masses()
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["m_q"], out["m_x"] = m_q, m_x
        cfg = self.integrator_config()
        out["rel_tol"], out["abs_tol"] = cfg.rel_tol, cfg.abs_tol
        out["integrator_method"] = cfg.method
        out["integrator_max_step"] = cfg.max_step
        out["integrator_initial_step"] = cfg.initial_step
        return out


_BOOL_KEYS = {"include_classical_motion"}
_INT_KEYS = {"samples_per_period"}
_STR_KEYS = {"name", "sector"}
_FIELD_NAMES = {f.name for f in fields(Scenario)}


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse the flat key = value schema; raises ConfigParse with location."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParse(f"expected 'key = value', got {raw!r}", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _FIELD_NAMES:
            raise ConfigParse(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ConfigParse(f"duplicate key {key!r}", line=lineno, key=key)
        if key in _STR_KEYS:
            values[key] = value
        elif key in _BOOL_KEYS:
            low = value.lower()
            if low not in ("true", "false"):
                raise ConfigParse(f"expected true/false, got {value!r}", line=lineno, key=key)
            values[key] = low == "true"
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigParse(f"expected integer, got {value!r}", line=lineno, key=key)
        else:
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigParse(f"expected number, got {value!r}", line=lineno, key=key)
    values.setdefault("name", name)
    return Scenario(**values)


def load_scenario(path) -> Scenario:
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read scenario file: {exc}")
    return parse_scenario(text, name=p.stem)


def _equal_mass_hybrid(name: str, **overrides) -> Scenario:
    base = dict(
        name=name,
        sector="hybrid",
        mass_ratio=1.0,
        k=1.0,
        hbar=1.0,
        Kqq=1.0,
        Kxx=1.0,
        Lxx=0.5,
        t_final_periods=2.0,
    )
    base.update(overrides)
    return Scenario(**base)


def builtin_scenarios() -> dict[str, Scenario]:
    """The reference scenarios; initial data as quoted by the study runs.

    Equal masses are m_q = m_x = 2 (reduced mass 1); the hybrid runs give
    the classical particle the quantum particle's momentum variance via
    L_xx(0) = 0.5 hbar K_xx.  The 'wide momentum' variant shrinks the
    position variances by a factor of 100.
    """
    return {
        "fig2-hybrid": _equal_mass_hybrid("fig2-hybrid"),
        "fig2-quantum": _equal_mass_hybrid("fig2-quantum", sector="quantum", Lxx=0.0),
        "fig3": _equal_mass_hybrid("fig3"),
        "fig4": _equal_mass_hybrid("fig4"),
        "fig5a": _equal_mass_hybrid("fig5a", mass_ratio=20.0),
        "fig5b": _equal_mass_hybrid("fig5b", mass_ratio=0.05),
        "fig6": _equal_mass_hybrid("fig6", Kqq=100.0, Kxx=100.0, Lxx=50.0),
    }


def get_scenario(name_or_path) -> Scenario:
    """Resolve a built-in name or a scenario file path."""
    builtins = builtin_scenarios()
    key = str(name_or_path)
    if key in builtins:
        return builtins[key]
    return load_scenario(name_or_path)
