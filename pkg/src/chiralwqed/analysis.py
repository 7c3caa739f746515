"""Power-law fits of decay rates and flatness/gap metrics of band surfaces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    r_squared: float
    n_points: int

    def predict(self, n):
        return np.exp(self.intercept) * np.asarray(n, float) ** self.exponent

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept,
                "r_squared": self.r_squared, "n_points": self.n_points}


def fit_power_law(points) -> PowerLawFit:
    """Ordinary least squares of ``log(gamma)`` against ``log(N)``.

    ``points`` is an iterable of ``(N, gamma)`` pairs; the slope is the
    exponent. ``r_squared`` is 1 when the data are exactly on a line,
    including the constant case.
    """
    pts = [(float(n), float(g)) for n, g in points]
    if len(pts) < 3:
        raise FitError(f"need at least 3 points, got {len(pts)}")
    for n, g in pts:
        if not (n >= 1 and math.isfinite(n)):
            raise FitError(f"invalid size N={n!r} in point ({n!r}, {g!r})")
        if not (g > 0 and math.isfinite(g)):
            raise FitError(f"non-positive or non-finite rate in point (N={n:g}, gamma={g!r})")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise FitError("all points share the same N")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    # constant data up to rounding: the fit is exact
    floor = len(pts) * (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2
    if ss_tot <= floor:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return PowerLawFit(slope, intercept, r2, len(pts))


@dataclass(frozen=True)
class BandMetrics:
    """Widths and separations of sorted bands over the sampled grid only.

    ``gaps[i]`` is the minimum over grid points of ``band[i+1] - band[i]``;
    ``min_gap`` is the smallest of them. ``flatness[i]`` is the width of band
    ``i`` over the global bandwidth (NaN when the global bandwidth is 0).
    """

    widths: tuple
    global_bandwidth: float
    flatness: tuple
    gaps: tuple
    min_gap: float
    n_points: int

    def as_dict(self) -> dict:
        return {"widths": list(self.widths), "global_bandwidth": self.global_bandwidth,
                "flatness": list(self.flatness), "gaps": list(self.gaps),
                "min_gap": self.min_gap, "n_points": self.n_points}


def band_metrics(surfaces) -> BandMetrics:
    """Metrics from an ``(n_points, n_bands)`` array or any object with ``points()``."""
    arr = surfaces.points() if hasattr(surfaces, "points") else surfaces
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    arr = arr.reshape(-1, arr.shape[-1])
    if arr.size == 0:
        raise ValueError("band_metrics needs at least one grid point and one band")
    if not np.all(np.isfinite(arr)):
        raise ValueError("band values contain NaN or inf; drop excluded points first")
    arr = np.sort(arr, axis=1)
    hi, lo = arr.max(axis=0), arr.min(axis=0)
    widths = tuple(float(w) for w in hi - lo)
    total = float(arr.max() - arr.min())
    flat = tuple(w / total if total > 0 else float("nan") for w in widths)
    gaps = tuple(float(g) for g in np.diff(arr, axis=1).min(axis=0)) if arr.shape[1] > 1 else ()
    return BandMetrics(widths, total, flat, gaps, min(gaps) if gaps else float("nan"), arr.shape[0])
