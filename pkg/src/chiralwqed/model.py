"""Shared vocabulary: phases, parameter records, polarizations and index layouts.

All energies in this package are shifts ``eps - omega`` relative to the bare
qubit frequency, measured in units of the single-atom decay rate ``gamma0``.
The decay rate reported everywhere is ``-Im(eps)``.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# symbol -> (value, exact cos, exact sin, quarter turns of exp(i*qd))
_SPECIAL_PHASES = {
    "pi/2": (0.5 * math.pi, 0.0, 1.0, 1),
    "pi": (math.pi, -1.0, 0.0, 2),
    "2pi": (TWO_PI, 1.0, 0.0, 0),
}
_QUARTER_TURNS = np.array([1.0, 1.0j, -1.0, -1.0j])

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ChiralWQEDError(Exception):
    """Base class for errors raised by this package."""


class PhaseParseError(ChiralWQEDError, ValueError):
    def __init__(self, token: str):
        super().__init__(
            f"cannot parse phase {token!r}: expected a decimal or one of "
            + ", ".join(repr(s) for s in _SPECIAL_PHASES)
        )
        self.token = token


class SingularK(ChiralWQEDError, ValueError):
    """Quasi-momentum too close to a pole of a Bloch matrix entry."""

    def __init__(self, k, pole: float, which: str):
        super().__init__(f"k={k} lies within tolerance of the {which} pole at {pole:.12g}")
        self.k = k
        self.pole = pole
        self.which = which


class ResonancePole(ChiralWQEDError, ValueError):
    """Scatterer evaluated at one of its bare level resonances."""


class DegenerateScatterer(ChiralWQEDError, ValueError):
    """Vanishing denominator in the scattering coefficients."""


class DefectiveMatrix(ChiralWQEDError):
    """Numerical eigenvectors of a (near-)defective matrix were requested."""


def heaviside_half(n: int) -> float:
    """Step function with the half-maximum convention, ``Theta(0) = 1/2``."""
    return 1.0 if n > 0 else (0.5 if n == 0 else 0.0)


@dataclass(frozen=True)
class PhaseQd:
    """Propagation phase ``q*d`` between neighbouring qubits.

    The value is reduced into ``(0, 2*pi]``. ``symbol`` is set for the exactly
    represented special values ``pi/2``, ``pi`` and ``2pi``; in that case the
    trigonometric helpers return exact values instead of rounded floats
    (``sin(pi)`` is 0, not 1.2e-16).
    """

    value: float
    symbol: str | None = None

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"phase must be finite, got {self.value!r}")
        if self.symbol is not None:
            if self.symbol not in _SPECIAL_PHASES:
                raise ValueError(f"unknown phase symbol {self.symbol!r}")
            exact = _SPECIAL_PHASES[self.symbol][0]
            if abs(v - exact) > 1e-15:
                raise ValueError(f"value {v!r} inconsistent with symbol {self.symbol!r}")
            v = exact
        else:
            v = math.fmod(v, TWO_PI)
            if v <= 0.0:
                v += TWO_PI
        object.__setattr__(self, "value", v)

    @classmethod
    def special(cls, symbol: str) -> PhaseQd:
        return cls(_SPECIAL_PHASES[symbol][0], symbol)

    @classmethod
    def coerce(cls, qd) -> PhaseQd:
        """Accept a PhaseQd, a float or a string such as ``"pi/2"``."""
        if isinstance(qd, PhaseQd):
            return qd
        if isinstance(qd, str):
            return parse_phase(qd)
        return cls(float(qd))

    @property
    def exact(self) -> bool:
        return self.symbol is not None

    def cos(self) -> float:
        return _SPECIAL_PHASES[self.symbol][1] if self.exact else math.cos(self.value)

    def sin(self) -> float:
        return _SPECIAL_PHASES[self.symbol][2] if self.exact else math.sin(self.value)

    def phase_powers(self, j) -> np.ndarray:
        """``exp(i*qd*j)`` for integer ``j`` (array-like), exact for symbols."""
        j = np.asarray(j)
        if self.exact:
            turns = _SPECIAL_PHASES[self.symbol][3]
            return _QUARTER_TURNS[np.mod(turns * j.astype(np.int64), 4)]
        return np.exp(1j * self.value * j)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return self.symbol if self.exact else repr(self.value)


def parse_phase(text: str) -> PhaseQd:
    """Parse ``"pi/2"``, ``"pi"``, ``"2pi"`` or a decimal number.

    >>> parse_phase("pi").exact
    True
    >>> parse_phase("1.5707963267948966").exact
    False
    """
    token = text.strip().lower().replace(" ", "")
    if token in _SPECIAL_PHASES:
        return PhaseQd.special(token)
    if _DECIMAL.match(token):
        return PhaseQd(float(token))
    raise PhaseParseError(text)


def _check_common(n_sites, gamma0):
    if isinstance(n_sites, bool) or int(n_sites) != n_sites or n_sites < 1:
        raise ValueError(f"n_sites must be a positive integer, got {n_sites!r}")
    if not (math.isfinite(gamma0) and gamma0 > 0):
        raise ValueError(f"gamma0 must be finite and > 0, got {gamma0!r}")


def _check_detuning(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ChainSpec:
    """N-qubit chain over one chiral waveguide (detuning ``delta`` in gamma0 units)."""

    n_sites: int
    qd: PhaseQd
    delta: float = 0.0
    gamma0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "qd", PhaseQd.coerce(self.qd))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "gamma0", float(self.gamma0))
        _check_common(self.n_sites, self.gamma0)
        object.__setattr__(self, "n_sites", int(self.n_sites))
        _check_detuning("delta", self.delta)

    def as_dict(self) -> dict:
        return {"n_sites": self.n_sites, "qd": str(self.qd), "delta": self.delta,
                "gamma0": self.gamma0}


@dataclass(frozen=True)
class LatticeSpec:
    """N x N square lattice on a network of chiral waveguides."""

    n_sites: int
    qd: PhaseQd
    delta_x: float = 0.0
    delta_y: float = 0.0
    gamma0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "qd", PhaseQd.coerce(self.qd))
        for name in ("delta_x", "delta_y", "gamma0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_common(self.n_sites, self.gamma0)
        object.__setattr__(self, "n_sites", int(self.n_sites))
        _check_detuning("delta_x", self.delta_x)
        _check_detuning("delta_y", self.delta_y)

    def as_dict(self) -> dict:
        return {"n_sites": self.n_sites, "qd": str(self.qd), "delta_x": self.delta_x,
                "delta_y": self.delta_y, "gamma0": self.gamma0}


class Polarization1D(enum.IntEnum):
    R = 0
    L = 1


class Polarization2D(enum.IntEnum):
    R_yz = 0
    L_yz = 1
    X = 2


# Columns express the linear states |x>, |y> in the circular basis (R, L):
# b_x^dag = (b_R^dag + b_L^dag)/sqrt2, b_y^dag = i(b_R^dag - b_L^dag)/sqrt2.
CIRCULAR_TO_LINEAR_1D = np.array([[1.0, 1.0j], [1.0, -1.0j]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class IndexLayout:
    """Site-major, polarization-minor row ordering.

    1D: ``row = 2*site + pol`` with ``site`` in ``range(N)``.
    2D: ``row = 3*(ix*N + iy) + pol``; ``ix`` runs along the x-waveguides and
    ``iy`` along the y-waveguides, so reshaping a per-site array to ``(N, N)``
    gives ``[ix, iy]`` indexing.
    """

    dimensionality: int
    n_sites: int
    orbitals_per_site: int = field(init=False)

    def __post_init__(self):
        if self.dimensionality not in (1, 2):
            raise ValueError("dimensionality must be 1 or 2")
        _check_common(self.n_sites, 1.0)
        object.__setattr__(self, "orbitals_per_site", 2 if self.dimensionality == 1 else 3)

    @property
    def polarizations(self):
        return Polarization1D if self.dimensionality == 1 else Polarization2D

    @property
    def n_site_total(self) -> int:
        return self.n_sites ** self.dimensionality

    @property
    def dim(self) -> int:
        return self.n_site_total * self.orbitals_per_site

    def _flat_site(self, site) -> int:
        n = self.n_sites
        if self.dimensionality == 1:
            s = int(site)
            if not 0 <= s < n:
                raise IndexError(f"site {site} out of range for N={n}")
            return s
        ix, iy = site
        if not (0 <= ix < n and 0 <= iy < n):
            raise IndexError(f"site {site} out of range for N={n}")
        return int(ix) * n + int(iy)

    def row_of(self, site, pol) -> int:
        pol = self.polarizations(pol)
        return self._flat_site(site) * self.orbitals_per_site + int(pol)

    def site_pol_of(self, row: int):
        if not 0 <= row < self.dim:
            raise IndexError(f"row {row} out of range for dim={self.dim}")
        flat, p = divmod(int(row), self.orbitals_per_site)
        pol = self.polarizations(p)
        if self.dimensionality == 1:
            return flat, pol
        return divmod(flat, self.n_sites), pol
