"""Large-scale path loss for indoor office and shopping-mall links.

Four deterministic model families are provided: the close-in free-space
reference distance model (CI), its frequency-dependent-exponent extension
(CIF), the alpha-beta-gamma model (ABG), and two-segment versions of CIF and
ABG. All evaluators take frequency in hertz (or a :class:`Frequency`) and the
3D distance in meters, and accept scalars or numpy arrays.

Shadow fading is never folded into the evaluators; draw it with
:func:`sample_shadow_fading` and add it explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
BAND_HZ = (0.5e9, 100e9)
_GHZ = 1e9


class OutOfBandWarning(UserWarning):
    """Frequency outside the 0.5-100 GHz range the parameters were fitted for."""


@dataclass(frozen=True)
class Frequency:
    """Carrier frequency. Stored in hertz; build from GHz with :meth:`from_ghz`."""

    hz: float
    _ghz: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.hz) and self.hz > 0):
            raise DomainError(f"frequency must be positive and finite, got {self.hz!r} Hz")

    @classmethod
    def from_ghz(cls, ghz: float) -> "Frequency":
        ghz = float(ghz)
        return cls(ghz * _GHZ, ghz)

    @property
    def ghz(self) -> float:
        return self._ghz if self._ghz is not None else self.hz / _GHZ


@dataclass(frozen=True)
class Distance:
    """Transmitter-receiver separation in meters."""

    m: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0):
            raise DomainError(f"distance must be non-negative, got {self.m!r} m")


FrequencyLike = Union[Frequency, float, np.ndarray]
DistanceLike = Union[Distance, float, np.ndarray]


class Environment(str, Enum):
    OFFICE = "office"
    MALL = "mall"


class LinkState(str, Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class Scenario:
    environment: Environment
    state: LinkState

    @classmethod
    def of(cls, environment: str, state: str) -> "Scenario":
        return cls(Environment(environment), LinkState(state))


# ---------------------------------------------------------------------------
# Parameter sets
# ---------------------------------------------------------------------------


def _check_sigma(sigma_sf):
    if not sigma_sf >= 0:
        raise DomainError(f"sigma_sf must be >= 0 dB, got {sigma_sf!r}")


def _check_cif_exponent(n, b, f0_hz, label):
    if not f0_hz > 0:
        raise DomainError(f"f0 must be positive, got {f0_hz!r} Hz")
    # The effective exponent is linear in f, so the band edges bound it.
    for f in BAND_HZ:
        if not n * (1.0 + b * (f - f0_hz) / f0_hz) > 0:
            raise DomainError(
                f"{label}: effective exponent n*(1+b*(f-f0)/f0) is not positive at {f / _GHZ:g} GHz"
            )


@dataclass(frozen=True)
class CiParams:
    n: float
    sigma_sf: float = 0.0

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError(f"path loss exponent must be positive, got {self.n!r}")
        _check_sigma(self.sigma_sf)


@dataclass(frozen=True)
class CifParams:
    n: float
    b: float
    f0_hz: float
    sigma_sf: float = 0.0

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError(f"path loss exponent must be positive, got {self.n!r}")
        _check_cif_exponent(self.n, self.b, self.f0_hz, "CIF")
        _check_sigma(self.sigma_sf)


@dataclass(frozen=True)
class AbgParams:
    alpha: float
    beta: float
    gamma: float
    sigma_sf: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma!r}")
        _check_sigma(self.sigma_sf)


@dataclass(frozen=True)
class DualCifParams:
    n1: float
    b1: float
    n2: float
    b2: float
    f0_hz: float
    d_bp: float
    sigma_sf: float = 0.0

    def __post_init__(self):
        if not (self.n1 > 0 and self.n2 > 0):
            raise DomainError("both segment exponents must be positive")
        _check_cif_exponent(self.n1, self.b1, self.f0_hz, "dual CIF segment 1")
        _check_cif_exponent(self.n2, self.b2, self.f0_hz, "dual CIF segment 2")
        if not self.d_bp > 1.0:
            raise DomainError(f"breakpoint must exceed 1 m, got {self.d_bp!r}")
        _check_sigma(self.sigma_sf)


@dataclass(frozen=True)
class DualAbgParams:
    alpha1: float
    beta1: float
    gamma: float
    alpha2: float
    d_bp: float
    sigma_sf: float = 0.0

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise DomainError("both segment slopes must be positive")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma!r}")
        if not self.d_bp > 1.0:
            raise DomainError(f"breakpoint must exceed 1 m, got {self.d_bp!r}")
        _check_sigma(self.sigma_sf)


ModelParams = Union[CiParams, CifParams, AbgParams, DualCifParams, DualAbgParams]


def with_sigma(params: ModelParams, sigma_sf: float) -> ModelParams:
    """Copy of ``params`` with a different shadow-fading deviation."""
    return replace(params, sigma_sf=float(sigma_sf))


# ---------------------------------------------------------------------------
# Input coercion
# ---------------------------------------------------------------------------


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _freq_hz(f: FrequencyLike):
    if isinstance(f, Frequency):
        hz = np.asarray(f.hz)
    else:
        hz = np.asarray(f, dtype=np.float64)
        if not np.all(np.isfinite(hz) & (hz > 0)):
            raise DomainError("frequency must be positive and finite")
    if np.any((hz < BAND_HZ[0]) | (hz > BAND_HZ[1])):
        warnings.warn(
            "frequency outside the supported 0.5-100 GHz band", OutOfBandWarning, stacklevel=3
        )
    return hz


def _dist_m(d: DistanceLike):
    m = np.asarray(d.m if isinstance(d, Distance) else d, dtype=np.float64)
    if not np.all(m >= 1.0):
        raise DomainError("path loss is only defined for distances >= 1 m")
    return m


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------


def fspl(f: FrequencyLike):
    """Free-space path loss at the 1 m reference distance, dB."""
    hz = _freq_hz(f)
    return _scalar_or_array(20.0 * np.log10(4.0 * np.pi * hz / SPEED_OF_LIGHT))


def _anchored(hz, n_eff, d):
    return 20.0 * np.log10(4.0 * np.pi * hz / SPEED_OF_LIGHT) + 10.0 * n_eff * np.log10(d)


def _cif_exponent(n, b, hz, f0_hz):
    return n * (1.0 + b * ((hz - f0_hz) / f0_hz))


def pl_ci(p: CiParams, f: FrequencyLike, d: DistanceLike):
    hz, d = _freq_hz(f), _dist_m(d)
    return _scalar_or_array(_anchored(hz, p.n, d))


def pl_cif(p: CifParams, f: FrequencyLike, d: DistanceLike):
    hz, d = _freq_hz(f), _dist_m(d)
    return _scalar_or_array(_anchored(hz, _cif_exponent(p.n, p.b, hz, p.f0_hz), d))


def pl_abg(p: AbgParams, f: FrequencyLike, d: DistanceLike):
    """ABG path loss. The frequency term uses f in GHz."""
    hz, d = _freq_hz(f), _dist_m(d)
    return _scalar_or_array(
        10.0 * p.alpha * np.log10(d) + p.beta + 10.0 * p.gamma * np.log10(hz / _GHZ)
    )


def pl_dual(p: DualCifParams | DualAbgParams, f: FrequencyLike, d: DistanceLike):
    """Two-segment path loss, continuous at ``p.d_bp``.

    Distances up to and including the breakpoint use the first segment; beyond
    it, the second slope is applied to ``log10(d / d_bp)`` on top of the first
    segment's value at the breakpoint.
    """
    hz, d = _freq_hz(f), _dist_m(d)
    near = np.minimum(d, p.d_bp)
    far = np.log10(np.maximum(d, p.d_bp) / p.d_bp)
    if isinstance(p, DualCifParams):
        out = (
            _anchored(hz, _cif_exponent(p.n1, p.b1, hz, p.f0_hz), near)
            + 10.0 * _cif_exponent(p.n2, p.b2, hz, p.f0_hz) * far
        )
    elif isinstance(p, DualAbgParams):
        out = (
            10.0 * p.alpha1 * np.log10(near)
            + p.beta1
            + 10.0 * p.gamma * np.log10(hz / _GHZ)
            + 10.0 * p.alpha2 * far
        )
    else:
        raise TypeError(f"not a dual-slope parameter set: {type(p).__name__}")
    return _scalar_or_array(out)


_EVALUATORS = {
    CiParams: pl_ci,
    CifParams: pl_cif,
    AbgParams: pl_abg,
    DualCifParams: pl_dual,
    DualAbgParams: pl_dual,
}


def path_loss(p: ModelParams, f: FrequencyLike, d: DistanceLike):
    """Deterministic path loss for any parameter set, dB."""
    try:
        fn = _EVALUATORS[type(p)]
    except KeyError:
        raise TypeError(f"unsupported parameter set {type(p).__name__}") from None
    return fn(p, f, d)


def sample_shadow_fading(sigma_sf: float, rng: np.random.Generator, size=None):
    """Zero-mean Gaussian shadow fading draw(s) in dB."""
    if not sigma_sf >= 0:
        raise DomainError(f"sigma_sf must be >= 0 dB, got {sigma_sf!r}")
    draw = rng.normal(0.0, 1.0, size=size) * sigma_sf
    return _scalar_or_array(draw)
