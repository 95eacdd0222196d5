"""Parameter estimation for the path loss families and LOS-curve scoring.

Every fit minimizes the shadow-fading deviation, i.e. the root-mean-square of
the residuals ``measured - model``. That objective is an ordinary least-squares
problem in each family's linear parameters:

* CI: one coefficient, the exponent ``n``, solved in closed form.
* CIF: ``n`` and ``n*b`` against the regressors ``D`` and ``D*u`` where
  ``D = 10 log10 d`` and ``u = (f - f0) / f0``.
* ABG: ``alpha``, ``beta``, ``gamma`` against ``D``, ``1``, ``10 log10 f_GHz``.
* Dual slope: for a fixed breakpoint the continuous two-segment model is
  linear too; the breakpoint is chosen by exhaustive search over a grid.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DataFormatError, DegenerateDesignError, DomainError, FitFailureError
from .los import LosModel, p_los
from .pathloss import (
    AbgParams,
    CifParams,
    CiParams,
    DualAbgParams,
    DualCifParams,
    Environment,
    Frequency,
    LinkState,
    ModelParams,
    Scenario,
    fspl,
    path_loss,
    with_sigma,
)
from .registry import params_to_dict

_GHZ = 1e9
SAMPLE_COLUMNS = ("f_ghz", "d_m", "pl_db", "env", "state")
LOS_COLUMNS = ("d_m", "los")
_TIE_TOL = 1e-12  # relative to sum(y^2): candidates this close are tied


class SingleFrequencyWarning(UserWarning):
    """Frequency-slope terms were dropped because the data has one frequency."""


@dataclass(frozen=True)
class MeasurementSample:
    f: Frequency
    d: float
    pl: float
    scenario: Scenario | None = None

    def __post_init__(self):
        if not self.d >= 1.0:
            raise DomainError(f"sample distance must be >= 1 m, got {self.d!r}")
        if not math.isfinite(self.pl):
            raise DomainError(f"sample path loss must be finite, got {self.pl!r}")


@dataclass(frozen=True)
class SampleSet:
    """Column-oriented samples: frequency (Hz), distance (m), path loss (dB)."""

    f_hz: np.ndarray
    d_m: np.ndarray
    pl_db: np.ndarray

    def __post_init__(self):
        f, d, pl = (np.asarray(a, dtype=np.float64).ravel() for a in (self.f_hz, self.d_m, self.pl_db))
        if not (f.shape == d.shape == pl.shape):
            raise DomainError("f_hz, d_m and pl_db must have the same length")
        if not np.all(f > 0):
            raise DomainError("sample frequencies must be positive")
        if not np.all(d >= 1.0):
            raise DomainError("sample distances must be >= 1 m")
        if not np.all(np.isfinite(pl)):
            raise DomainError("sample path losses must be finite")
        object.__setattr__(self, "f_hz", f)
        object.__setattr__(self, "d_m", d)
        object.__setattr__(self, "pl_db", pl)

    def __len__(self) -> int:
        return self.f_hz.size

    @classmethod
    def from_samples(cls, samples: Iterable[MeasurementSample]) -> "SampleSet":
        samples = list(samples)
        return cls(
            np.array([s.f.hz for s in samples], dtype=np.float64),
            np.array([s.d for s in samples], dtype=np.float64),
            np.array([s.pl for s in samples], dtype=np.float64),
        )


def as_sample_set(samples) -> SampleSet:
    if isinstance(samples, SampleSet):
        return samples
    return SampleSet.from_samples(samples)


@dataclass
class FitResult:
    params: ModelParams
    sigma_sf: float
    residuals: np.ndarray = field(repr=False)
    sample_count: int
    family: str
    slope: str = "single"
    bp_grid: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "slope": self.slope,
            "params": params_to_dict(self.params),
            "sigma_sf_db": self.sigma_sf,
            "sample_count": self.sample_count,
            "bp_grid_m": None if self.bp_grid is None else list(self.bp_grid),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _rms(e: np.ndarray) -> float:
    return float(np.sqrt(np.mean(e * e)))


def _finish(params, s: SampleSet, family, slope="single", bp_grid=None) -> FitResult:
    residuals = s.pl_db - np.asarray(path_loss(params, s.f_hz, s.d_m))
    sigma = _rms(residuals)
    return FitResult(with_sigma(params, sigma), sigma, residuals, len(s), family, slope, bp_grid)


def _require_distances(s: SampleSet, minimum=2):
    if len(s) < minimum:
        raise DegenerateDesignError(f"need at least {minimum} samples, got {len(s)}")
    if np.unique(s.d_m).size < 2:
        raise DegenerateDesignError("distance column is constant: need at least 2 distinct distances")


def centroid_f0(samples) -> Frequency:
    """Sample-count weighted centroid of the distinct frequencies in the data."""
    s = as_sample_set(samples)
    if len(s) == 0:
        raise DomainError("centroid of an empty sample set")
    freqs, counts = np.unique(s.f_hz, return_counts=True)
    return Frequency(float(np.sum(freqs * counts) / np.sum(counts)))


def fit_ci(samples) -> FitResult:
    s = as_sample_set(samples)
    _require_distances(s)
    D = 10.0 * np.log10(s.d_m)
    A = s.pl_db - fspl(s.f_hz)
    dd = float(D @ D)
    if dd == 0.0:
        raise DegenerateDesignError("all samples are at the 1 m anchor; the exponent is unidentifiable")
    n = float(D @ A) / dd
    if not n > 0:
        raise FitFailureError(f"fitted path loss exponent is not positive ({n:.4g})")
    return _finish(CiParams(n), s, "ci")


def fit_abg(samples) -> FitResult:
    s = as_sample_set(samples)
    _require_distances(s, minimum=3)
    if np.unique(s.f_hz).size < 2:
        raise DegenerateDesignError(
            "frequency column is constant: ABG needs at least 2 distinct frequencies"
        )
    X = np.column_stack([10.0 * np.log10(s.d_m), np.ones(len(s)), 10.0 * np.log10(s.f_hz / _GHZ)])
    coef, _, rank, _ = np.linalg.lstsq(X, s.pl_db, rcond=None)
    if rank < 3:
        raise DegenerateDesignError("ABG design matrix is rank deficient")
    try:
        params = AbgParams(float(coef[0]), float(coef[1]), float(coef[2]))
    except DomainError as exc:
        raise FitFailureError(str(exc)) from exc
    return _finish(params, s, "abg")


def fit_cif(samples) -> FitResult:
    s = as_sample_set(samples)
    _require_distances(s)
    f0 = centroid_f0(s).hz
    if np.unique(s.f_hz).size < 2:
        warnings.warn(
            "single-frequency data: CIF reduces to CI, b fixed to 0", SingleFrequencyWarning, stacklevel=2
        )
        n = fit_ci(s).params.n
        return _finish(CifParams(n, 0.0, f0), s, "cif")
    D = 10.0 * np.log10(s.d_m)
    u = (s.f_hz - f0) / f0
    X = np.column_stack([D, D * u])
    coef, _, rank, _ = np.linalg.lstsq(X, s.pl_db - fspl(s.f_hz), rcond=None)
    if rank < 2:
        raise DegenerateDesignError("CIF design matrix is rank deficient")
    n, nb = float(coef[0]), float(coef[1])
    if not n > 0:
        raise FitFailureError(f"fitted path loss exponent is not positive ({n:.4g})")
    try:
        params = CifParams(n, nb / n, f0)
    except DomainError as exc:
        raise FitFailureError(str(exc)) from exc
    return _finish(params, s, "cif")


def default_bp_grid(d_m: np.ndarray, points: int = 50) -> np.ndarray:
    """Log-spaced breakpoints between the 5th and 95th distance percentiles."""
    lo, hi = np.percentile(d_m, [5.0, 95.0])
    lo = max(lo, np.nextafter(1.0, 2.0))
    if not hi > lo:
        raise DegenerateDesignError("distance spread too small for a breakpoint grid")
    return np.geomspace(lo, hi, points)


def fit_dual(samples, family: str = "abg", bp_grid: Sequence[float] | None = None, min_side: int = 2) -> FitResult:
    """Two-segment fit with the breakpoint chosen from ``bp_grid``.

    Continuity at the breakpoint is built into the design, so each candidate is
    a plain least-squares problem. The candidate with the smallest residual RMS
    wins; ties go to the smallest breakpoint.
    """
    s = as_sample_set(samples)
    family = family.lower()
    if family not in ("cif", "abg"):
        raise ValueError(f"dual-slope family must be 'cif' or 'abg', got {family!r}")
    _require_distances(s, minimum=2 * min_side)
    grid = default_bp_grid(s.d_m) if bp_grid is None else np.asarray(bp_grid, dtype=np.float64)
    grid = np.unique(grid[grid > 1.0])
    if grid.size == 0:
        raise DegenerateDesignError("breakpoint grid has no candidate above 1 m")

    D = 10.0 * np.log10(s.d_m)
    ones = np.ones((len(s), 1))
    single_freq = np.unique(s.f_hz).size < 2
    if family == "cif":
        f0 = centroid_f0(s).hz
        y = s.pl_db - fspl(s.f_hz)
        if single_freq:
            warnings.warn(
                "single-frequency data: frequency slopes fixed to 0", SingleFrequencyWarning, stacklevel=2
            )
            G = ones
        else:
            G = np.column_stack([ones[:, 0], (s.f_hz - f0) / f0])
        G1, G2, C = G, G, np.zeros((len(s), 0))
    else:
        if single_freq:
            raise DegenerateDesignError(
                "frequency column is constant: dual ABG needs at least 2 distinct frequencies"
            )
        y = s.pl_db
        G1, G2 = ones, ones
        C = np.column_stack([ones[:, 0], 10.0 * np.log10(s.f_hz / _GHZ)])

    sse, coef, valid = kernels.scan_breakpoints(D, y, G1, G2, C, 10.0 * np.log10(grid), min_side)
    if not valid.any():
        raise DegenerateDesignError(
            f"no breakpoint candidate has at least {min_side} samples on each side"
        )
    # Equal residual std (up to rounding) goes to the smallest breakpoint.
    sse = np.where(valid, sse, np.inf)
    best = int(np.argmax(sse <= sse.min() + _TIE_TOL * float(y @ y)))
    c = coef[best]
    d_bp = float(grid[best])
    try:
        if family == "cif":
            if single_freq:
                params = DualCifParams(float(c[0]), 0.0, float(c[1]), 0.0, f0, d_bp)
            else:
                params = DualCifParams(float(c[0]), float(c[1] / c[0]), float(c[2]), float(c[3] / c[2]), f0, d_bp)
        else:
            params = DualAbgParams(float(c[0]), float(c[2]), float(c[3]), float(c[1]), d_bp)
    except (DomainError, ZeroDivisionError) as exc:
        raise FitFailureError(f"dual-slope fit at d_bp={d_bp:.3g} m: {exc}") from exc
    return _finish(params, s, family, "dual", tuple(float(g) for g in grid))


# ---------------------------------------------------------------------------
# LOS probability scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LosObservation:
    d: float
    los: bool

    def __post_init__(self):
        if not self.d >= 0:
            raise DomainError(f"observation distance must be non-negative, got {self.d!r}")


def _obs_arrays(obs):
    if isinstance(obs, tuple) and len(obs) == 2:
        d, los = obs
        return np.asarray(d, dtype=np.float64), np.asarray(los, dtype=bool)
    obs = list(obs)
    return (
        np.array([o.d for o in obs], dtype=np.float64),
        np.array([o.los for o in obs], dtype=bool),
    )


def binned_los_fraction(d, los, bin_width: float = 1.0):
    """Empirical LOS fraction per non-empty distance bin.

    Returns ``(centers, fractions, counts)``.
    """
    if not bin_width > 0:
        raise DomainError(f"bin width must be positive, got {bin_width!r}")
    d = np.asarray(d, dtype=np.float64)
    los = np.asarray(los, dtype=bool)
    if d.size == 0:
        raise DomainError("no LOS observations")
    if not np.all(d >= 0):
        raise DomainError("observation distances must be non-negative")
    idx = np.floor(d / bin_width).astype(np.int64)
    counts = np.bincount(idx)
    hits = np.bincount(idx, weights=los.astype(np.float64))
    keep = np.nonzero(counts)[0]
    return (keep + 0.5) * bin_width, hits[keep] / counts[keep], counts[keep]


def los_mse(model: LosModel | str | Callable, obs, bin_width: float = 1.0) -> float:
    """Mean squared error between binned empirical LOS fractions and a curve.

    ``obs`` is a sequence of :class:`LosObservation` or a ``(d, los)`` array
    pair. The curve is evaluated at bin centers; empty bins are skipped.
    """
    d, los = _obs_arrays(obs)
    centers, frac, _ = binned_los_fraction(d, los, bin_width)
    curve = model if callable(model) else (lambda x: p_los(model, x))
    return float(np.mean((frac - np.asarray(curve(centers))) ** 2))


def rank_los_models(obs, bin_width: float = 1.0, models: Iterable[LosModel] = tuple(LosModel)):
    """``[(model, mse), ...]`` sorted by ascending MSE (stable in enum order)."""
    scores = [(m, los_mse(m, obs, bin_width)) for m in models]
    return sorted(scores, key=lambda t: t[1])


# ---------------------------------------------------------------------------
# CSV input
# ---------------------------------------------------------------------------


def _open_rows(path, expected):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        missing = [c for c in expected if c not in header]
        if missing:
            raise DataFormatError(f"{path}: line 1: missing column(s) {', '.join(missing)}")
        cols = {c: header.index(c) for c in expected}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, {c: row[i].strip() for c, i in cols.items()}))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return rows


def read_samples_csv(path: str | os.PathLike) -> list[MeasurementSample]:
    """Load ``f_ghz,d_m,pl_db,env,state`` rows."""
    out = []
    for lineno, r in _open_rows(path, SAMPLE_COLUMNS):
        try:
            out.append(
                MeasurementSample(
                    Frequency.from_ghz(float(r["f_ghz"])),
                    float(r["d_m"]),
                    float(r["pl_db"]),
                    Scenario(Environment(r["env"].lower()), LinkState(r["state"].lower())),
                )
            )
        except (ValueError, DomainError) as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    return out


def read_los_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Load ``d_m,los`` rows into ``(d, los)`` arrays."""
    d, los = [], []
    for lineno, r in _open_rows(path, LOS_COLUMNS):
        try:
            dist = float(r["d_m"])
            flag = int(r["los"])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
        if flag not in (0, 1) or not dist >= 0:
            raise DataFormatError(f"{path}: line {lineno}: need d_m >= 0 and los in {{0,1}}")
        d.append(dist)
        los.append(bool(flag))
    return np.array(d), np.array(los)


def write_residuals_csv(result: FitResult, samples, path: str | os.PathLike) -> None:
    s = as_sample_set(samples)
    model = np.asarray(path_loss(result.params, s.f_hz, s.d_m))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_ghz", "d_m", "pl_db", "model_db", "residual_db"])
        for f, d, pl, m, e in zip(s.f_hz, s.d_m, s.pl_db, model, result.residuals):
            w.writerow([f"{f / _GHZ:.6g}", f"{d:.4f}", f"{pl:.4f}", f"{m:.4f}", f"{e:.4f}"])
