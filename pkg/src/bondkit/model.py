"""Model parameters and shared grid/curve types.

The short rate follows the one-factor dynamics

    dr = (alpha + beta*r) dt + sigma * r**gamma dW

under the pricing measure, with alpha > 0, sigma > 0, gamma >= 0 and beta any
real (mean reversion requires beta < 0).  Rates are annualized decimals
(0.15 means 15 percent) and maturities are in years.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FellerViolated,
    NegativeGamma,
    NonPositiveAlpha,
    NonPositiveSigma,
    ValidationError,
)

__all__ = [
    "ModelParams",
    "RateGrid",
    "MaturityGrid",
    "LogPriceCurve",
    "DEFAULT_PARAMS",
    "validate_params",
    "load_params",
    "save_params",
]


@dataclass(frozen=True)
class ModelParams:
    """CKLS parameter set (alpha, beta, sigma, gamma).

    Construction never raises; run :func:`validate_params` to enforce the
    invariants.  Instances are immutable and safe to share across threads.
    """

    alpha: float
    beta: float
    sigma: float
    gamma: float

    def with_gamma(self, gamma: float) -> "ModelParams":
        return ModelParams(self.alpha, self.beta, self.sigma, gamma)


#: Benchmark parameter set used as the zero-configuration default throughout
#: the CLI and the golden tables: alpha=0.00315, beta=-0.0555, sigma=0.0894.
DEFAULT_PARAMS = ModelParams(alpha=0.00315, beta=-0.0555, sigma=0.0894, gamma=0.5)


def validate_params(p: ModelParams, requires_cir_condition: bool = False) -> ModelParams:
    """Return ``p`` unchanged if all invariants hold, else raise.

    The Feller condition ``2*alpha >= sigma**2`` is enforced only when
    ``requires_cir_condition`` is set: the closed-form price stays
    well-defined without it (it matters for positivity of the rate process,
    not for formula evaluation), and the benchmark parameter set violates it.
    """
    if not p.alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {p.alpha}")
    if not p.sigma > 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {p.sigma}")
    if p.gamma < 0:
        raise NegativeGamma(f"gamma must be >= 0, got {p.gamma}")
    if requires_cir_condition and 2.0 * p.alpha < p.sigma**2:
        raise FellerViolated(
            f"2*alpha = {2.0 * p.alpha} < sigma^2 = {p.sigma**2}; "
            "square-root-model positivity condition violated"
        )
    return p


@dataclass(frozen=True)
class RateGrid:
    """Uniform grid of ``n_points`` rates on [r_min, r_max]."""

    r_min: float
    r_max: float
    n_points: int

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max:
            raise ValidationError(
                f"need 0 <= r_min < r_max, got [{self.r_min}, {self.r_max}]"
            )
        if self.n_points < 2:
            raise ValidationError(f"need n_points >= 2, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_points)


@dataclass(frozen=True)
class MaturityGrid:
    """Strictly monotone sequence of positive maturities (years)."""

    taus: tuple

    def __init__(self, taus):
        object.__setattr__(self, "taus", tuple(float(t) for t in taus))
        if len(self.taus) == 0:
            raise ValidationError("need at least one maturity")
        if any(t <= 0 for t in self.taus):
            raise ValidationError(f"all maturities must be > 0, got {self.taus}")
        if len(self.taus) > 1:
            diffs = np.diff(self.taus)
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ValidationError(f"maturities must be strictly monotone, got {self.taus}")

    def __iter__(self):
        return iter(self.taus)

    def __len__(self):
        return len(self.taus)


@dataclass(frozen=True)
class LogPriceCurve:
    """Log bond prices sampled over a rate grid at a fixed maturity."""

    grid: RateGrid
    tau: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n_points,):
            raise ValidationError(
                f"values shape {vals.shape} does not match grid ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("curve contains non-finite values")
        if self.tau == 0 and np.any(vals != 0.0):
            raise ValidationError("at tau=0 all log prices must be exactly 0 (P(0,r)=1)")


_LINE = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*([^#]+?)\s*(?:#.*)?$")
_KEYS = ("alpha", "beta", "sigma", "gamma")


def load_params(path) -> ModelParams:
    """Read a ``key = value`` parameter file (keys alpha/beta/sigma/gamma,
    decimal notation, ``#`` comments)."""
    found = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            raise ValidationError(f"{path}:{lineno}: cannot parse {raw!r}")
        key, val = m.group(1).lower(), m.group(2)
        if key not in _KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            found[key] = float(val)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad number {val!r}") from None
    missing = [k for k in _KEYS if k not in found]
    if missing:
        raise ValidationError(f"{path}: missing keys {missing}")
    return ModelParams(**found)


def save_params(p: ModelParams, path) -> None:
    """Write ``p`` in the flat key-value format; floats use shortest
    round-trip representation so load(save(p)) == p exactly."""
    lines = [f"{k} = {getattr(p, k)!r}" for k in _KEYS]
    Path(path).write_text("\n".join(lines) + "\n")
