"""Exact single-excitation dispersion of the infinite chain via transfer matrices.

Throughout, ``x = omega - eps`` is the detuning variable of the scatterer; band
energies are reported as shifts ``eps - omega = -x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import BandSet, k_grid, markov_bands_1d
from .model import ChainSpec, DegenerateScatterer, PhaseQd, ResonancePole

# "rotated": R h0 R^-1 with h0 = diag(i g0/(omega_nu - eps)), i.e. i g0/(x^2-d^2) [[x,-d],[-d,x]].
# "doubled": the same matrix with twice the normalization.
SCATTERER_CONVENTIONS = {"rotated": 1.0, "doubled": 2.0}

POLE_TOL = 1e-12
ROOT_IMAG_TOL = 1e-9
RESIDUAL_TOL = 1e-10

# circular <-> linear field amplitudes
ROTATION = np.array([[1.0, 1.0j], [1.0, -1.0j]]) / math.sqrt(2.0)
ROTATION_INV = np.array([[1.0, 1.0], [-1.0j, 1.0j]]) / math.sqrt(2.0)


def scatterer_matrix(x: float, delta: float, gamma0: float = 1.0,
                     convention: str = "rotated") -> np.ndarray:
    """Scatterer matrix of the two detuned levels in the circular basis."""
    scale = SCATTERER_CONVENTIONS[convention]
    den = x * x - delta * delta
    if abs(den) < POLE_TOL:
        raise ResonancePole(f"x={x} is at a level resonance x^2 = delta^2 (delta={delta})")
    return (scale * 1j * gamma0 / den) * np.array([[x, -delta], [-delta, x]], dtype=complex)


def _coefficient_denominator(x, delta, gamma0):
    den = (x - 0.5j * gamma0) ** 2 - delta * delta
    if abs(den) < POLE_TOL:
        raise DegenerateScatterer(f"(x - i*gamma0/2)^2 - delta^2 vanishes at x={x}")
    return den


def scattering_coefficients(x: float, delta: float, gamma0: float = 1.0):
    """Transmission and reflection ``(t, r)`` of one chiral scatterer."""
    den = _coefficient_denominator(x, delta, gamma0)
    t = (x * x - delta * delta + 0.25 * gamma0 * gamma0) / den
    r = -1j * delta * gamma0 / den
    return complex(t), complex(r)


@dataclass(frozen=True)
class ScattererResponse:
    x: float
    t: complex
    r: complex
    h: np.ndarray
    convention: str = "rotated"


def scatterer_response(x: float, delta: float, gamma0: float = 1.0,
                       convention: str = "rotated") -> ScattererResponse:
    t, r = scattering_coefficients(x, delta, gamma0)
    return ScattererResponse(x, t, r, scatterer_matrix(x, delta, gamma0, convention), convention)


def transfer_matrix(x: float, qd, delta: float, gamma0: float = 1.0) -> np.ndarray:
    """Transfer matrix over one period (free layer of phase ``qd`` plus scatterer)."""
    qd = PhaseQd.coerce(qd)
    t, r = scattering_coefficients(x, delta, gamma0)
    if t == 0:
        raise DegenerateScatterer(f"transmission vanishes at x={x}")
    e = complex(qd.cos(), qd.sin())
    return np.array([[(t * t - r * r) * e, r], [-r, e.conjugate()]]) / t


def dispersion_rhs(x, qd, delta: float, gamma0: float = 1.0):
    """Right-hand side ``F(x)`` of the band condition ``cos(kd) = F(x)``."""
    qd = PhaseQd.coerce(qd)
    x = np.asarray(x, dtype=float)
    g2 = 0.25 * gamma0 * gamma0
    den = x * x - delta * delta + g2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (qd.cos() * (x * x - delta * delta - g2) - qd.sin() * x * gamma0) / den
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExactBandPoint:
    kd: float
    roots: tuple
    residuals: tuple

    @property
    def energies(self) -> tuple:
        return tuple(-x for x in self.roots)


def band_quadratic(kd: float, qd, delta: float, gamma0: float = 1.0):
    """Coefficients ``(A, B, C)`` of ``A x^2 + B x + C = 0`` from clearing the denominator."""
    qd = PhaseQd.coerce(qd)
    ck, cq, sq = math.cos(kd), qd.cos(), qd.sin()
    a = ck - cq
    b = gamma0 * sq
    c = (ck + cq) * gamma0 * gamma0 / 4.0 - (ck - cq) * delta * delta
    return a, b, c


def _quadratic_roots(a, b, c):
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        return [] if b == 0 else [complex(-c / b)]
    disc = complex(b * b - 4.0 * a * c)
    sq = disc ** 0.5
    # numerically stable pair
    q = -0.5 * (b + (sq if b >= 0 else -sq))
    if q == 0:
        return [complex(0.0), complex(0.0)]
    return [q / a, c / q]


def solve_exact_bands(kd: float, spec: ChainSpec) -> ExactBandPoint:
    a, b, c = band_quadratic(kd, spec.qd, spec.delta, spec.gamma0)
    ck = math.cos(kd)
    roots, residuals = [], []
    for z in _quadratic_roots(a, b, c):
        if abs(z.imag) > ROOT_IMAG_TOL:
            continue
        x = z.real
        # one Newton step on the polynomial to clean up the root
        dp = 2.0 * a * x + b
        if dp != 0:
            x -= (a * x * x + b * x + c) / dp
        res = abs(ck - dispersion_rhs(x, spec.qd, spec.delta, spec.gamma0))
        if not res <= RESIDUAL_TOL:
            # spurious root introduced where the cleared denominator vanishes
            continue
        roots.append(float(x))
        residuals.append(float(res))
    order = np.argsort(roots, kind="stable")
    return ExactBandPoint(float(kd), tuple(roots[i] for i in order),
                          tuple(residuals[i] for i in order))


def exact_bands_1d(spec: ChainSpec, k_points: int) -> list:
    return [solve_exact_bands(float(kd), spec) for kd in k_grid(k_points)]


@dataclass(frozen=True, eq=False)
class DispersionComparison:
    """Matched-band deviations between a reference and an alternative band set."""

    k: np.ndarray
    reference: np.ndarray
    other: np.ndarray
    deviations: np.ndarray
    flags: tuple

    @property
    def max_deviation(self) -> float:
        d = self.deviations[np.isfinite(self.deviations)]
        return float(d.max()) if d.size else float("nan")

    @property
    def mean_deviation(self) -> float:
        d = self.deviations[np.isfinite(self.deviations)]
        return float(d.mean()) if d.size else float("nan")


def compare_band_sets(k_ref, ref: np.ndarray, k_other, other: np.ndarray) -> DispersionComparison:
    """Compare two ``(n_bands, n_k)`` value arrays (NaN = missing) on one grid."""
    k_ref, k_other = np.asarray(k_ref, float), np.asarray(k_other, float)
    if k_ref.shape != k_other.shape or np.any(k_ref != k_other):
        raise ValueError("band sets are sampled on different k-grids")
    ref, other = np.asarray(ref, float), np.asarray(other, float)
    if ref.shape != other.shape:
        raise ValueError(f"band count mismatch: {ref.shape} vs {other.shape}")
    dev = np.abs(ref - other)
    flags = []
    for j, kd in enumerate(k_ref):
        miss_ref = int(np.isnan(ref[:, j]).sum())
        miss_other = int(np.isnan(other[:, j]).sum())
        if miss_ref:
            flags.append((float(kd), f"{miss_ref} reference band value(s) missing"))
        if miss_other:
            flags.append((float(kd), f"{miss_other} comparison band value(s) missing"))
    return DispersionComparison(k_ref, ref, other, dev, tuple(flags))


def compare_dispersions(spec: ChainSpec, k_points: int) -> DispersionComparison:
    """Markovian bands against exact transfer-matrix bands on the same grid.

    At each k the sorted Markovian energies are paired with the sorted exact
    energies ``-x`` when both methods return two values; anything else is
    flagged (Markov pole, or a gap without real exact roots).
    """
    ks = k_grid(k_points)
    ref = markov_to_array(markov_bands_1d(spec, k_points), ks)
    other = np.full((2, ks.size), np.nan)
    for j, pt in enumerate(exact_bands_1d(spec, k_points)):
        e = sorted(pt.energies)
        if len(e) == 2:
            other[:, j] = e
        elif len(e) == 1:
            # pair a single exact branch with the nearest Markov band
            row = 0 if np.isnan(ref[:, j]).all() else int(np.nanargmin(np.abs(ref[:, j] - e[0])))
            other[row, j] = e[0]
    cmp = compare_band_sets(ks, ref, ks, other)
    flags = [(kd, "Markov pole" if "reference" in why else "exact roots absent")
             for kd, why in cmp.flags]
    return DispersionComparison(cmp.k, ref, other, cmp.deviations, tuple(flags))


def markov_to_array(bands: BandSet, ks: np.ndarray) -> np.ndarray:
    out = np.full((bands.bands.shape[0], ks.size), np.nan)
    pos = {float(k): j for j, k in enumerate(ks)}
    for j, kd in enumerate(bands.k):
        out[:, pos[float(kd)]] = bands.bands[:, j]
    return out
