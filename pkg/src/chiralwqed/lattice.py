"""Square lattices on crossed chiral waveguides.

Each site carries three orbitals ``(R_yz, L_yz, X)``. The x-waveguides couple
``R_yz``/``L_yz`` directly. The y-waveguides couple the pair ``R_zx``/``L_zx``,
which is mapped into the site basis by :data:`SITE_TRANSFORM`: row ``a`` of
``u`` holds the coefficients of ``b_a`` (a in {R_zx, L_zx}) over
``(b_R_yz, b_L_yz, b_x)``, and an operator ``h`` written in the ``zx`` pair
becomes ``u^H h u`` in the site basis.

Detuning conventions
--------------------
``"rotated"`` (default) conjugates ``delta_y * sigma_x`` of the zx pair by
``u``, giving an ``X`` diagonal entry of ``-delta_y``. ``"x-positive"`` uses the
closed-form detuning matrix with ``+delta_y`` on the ``X`` diagonal. Both share
the ``R_yz``/``L_yz`` block ``[[dy/2, dx - dy/2], [dx - dy/2, dy/2]]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import DEFAULT_POLE_TOL, BlochMatrix, LatticeHamiltonian, check_chiral_poles, chiral_kernel, half_cot
from .model import IndexLayout, LatticeSpec, PhaseQd, SingularK

SQRT2 = math.sqrt(2.0)

SITE_TRANSFORM = 0.5j * np.array([[1.0, -1.0, -SQRT2], [1.0, -1.0, SQRT2]])

DETUNING_CONVENTIONS = ("rotated", "x-positive")

_E0 = np.diag([1.0, 0.0, 0.0]).astype(complex)
_E1 = np.diag([0.0, 1.0, 0.0]).astype(complex)


def _projector(row: np.ndarray) -> np.ndarray:
    return np.outer(row.conj(), row)


P_RZX = _projector(SITE_TRANSFORM[0])
P_LZX = _projector(SITE_TRANSFORM[1])


def rotate_zx(h2: np.ndarray) -> np.ndarray:
    """Map a 2x2 operator on (R_zx, L_zx) to the 3x3 site basis."""
    return SITE_TRANSFORM.conj().T @ h2 @ SITE_TRANSFORM


def detuning_block(delta_x: float, delta_y: float, convention: str = "rotated") -> np.ndarray:
    if convention not in DETUNING_CONVENTIONS:
        raise ValueError(f"unknown detuning convention {convention!r}")
    off = delta_x - 0.5 * delta_y
    x_entry = -delta_y if convention == "rotated" else delta_y
    return np.array([[0.5 * delta_y, off, 0.0], [off, 0.5 * delta_y, 0.0], [0.0, 0.0, x_entry]])


def build_lattice_hamiltonian(spec: LatticeSpec, convention: str = "rotated",
                              include=("x", "y")) -> LatticeHamiltonian:
    """Real-space ``3N^2 x 3N^2`` Hamiltonian; ``include`` selects waveguide families."""
    n = spec.n_sites
    kern = chiral_kernel(n, spec.qd, spec.gamma0)
    eye = np.eye(n)
    h = np.kron(np.eye(n * n), detuning_block(spec.delta_x, spec.delta_y, convention))
    if "x" in include:
        # chains along ix at fixed iy
        h = h + np.kron(np.kron(kern, eye), _E0) + np.kron(np.kron(kern.T, eye), _E1)
    if "y" in include:
        h = h + np.kron(np.kron(eye, kern), P_RZX) + np.kron(np.kron(eye, kern.T), P_LZX)
    meta = {"convention": convention, "include": list(include)}
    return LatticeHamiltonian(h, IndexLayout(2, n), spec, meta)


def _check_y_poles(ky: float, qd: PhaseQd, tol: float) -> None:
    if abs(qd.cos() - math.cos(ky)) < tol:
        raise SingularK(ky, math.remainder(qd.value, 2 * math.pi),
                        "1/(cos(qd)-cos(ky))")


def bloch_hamiltonian_2d_full(kx_d: float, ky_d: float, spec: LatticeSpec,
                              convention: str = "rotated",
                              tol: float = DEFAULT_POLE_TOL) -> BlochMatrix:
    """Full 3x3 Bloch matrix: cotangent terms from both waveguide families plus detuning."""
    check_chiral_poles(kx_d, spec.qd, tol, "kx")
    check_chiral_poles(ky_d, spec.qd, tol, "ky")
    _check_y_poles(ky_d, spec.qd, tol)
    g = spec.gamma0 / 4.0
    cr_x, cl_x = half_cot(spec.qd, kx_d)
    # cot((qd-ky)/2) +- cot((qd+ky)/2) in ratio form
    den = spec.qd.cos() - math.cos(ky_d)
    even = -0.5 * spec.qd.sin() / den
    odd = math.sin(ky_d) / (SQRT2 * den)
    h = g * np.array([
        [cr_x + even, -even, odd],
        [-even, cl_x + even, -odd],
        [odd, -odd, 2.0 * even],
    ])
    h = h + detuning_block(spec.delta_x, spec.delta_y, convention)
    return BlochMatrix((float(kx_d), float(ky_d)), h, "full")


def bloch_hamiltonian_2d_linear(kx_d: float, ky_d: float, delta_x: float = 0.0,
                                delta_y: float = 0.0, gamma0: float = 1.0,
                                convention: str = "rotated") -> BlochMatrix:
    """Expansion of the qd = pi Bloch matrix to first order in k.

    The detunings enter inside the common ``gamma0/8`` prefactor, so at equal
    arguments their scale is ``gamma0/4`` times that of the full matrix;
    ``convention`` only flips the sign of the ``X`` diagonal entry ``2*delta_y``.
    """
    if convention not in DETUNING_CONVENTIONS:
        raise ValueError(f"unknown detuning convention {convention!r}")
    s = ky_d / SQRT2
    xx = -2.0 * delta_y if convention == "rotated" else 2.0 * delta_y
    off = 2.0 * delta_x - delta_y
    m = np.array([
        [kx_d + delta_y, off, -s],
        [off, -kx_d + delta_y, s],
        [-s, s, xx],
    ])
    return BlochMatrix((float(kx_d), float(ky_d)), (gamma0 / 8.0) * m, "linear")


@dataclass(frozen=True, eq=False)
class Bands2D:
    """Three sorted surfaces on a ``kx x ky`` grid (NaN where excluded)."""

    kx: np.ndarray
    ky: np.ndarray
    surfaces: np.ndarray  # (len(kx), len(ky), 3)
    excluded: tuple
    variant: str
    cut_kx0: np.ndarray  # bands along ky at kx = 0, shape (len(ky), 3)
    cut_ky0: np.ndarray  # bands along kx at ky = 0, shape (len(kx), 3)
    meta: dict = field(default_factory=dict)

    def points(self) -> np.ndarray:
        """Finite grid points as an ``(n_points, 3)`` array."""
        flat = self.surfaces.reshape(-1, 3)
        return flat[np.all(np.isfinite(flat), axis=1)]


def bands_2d(spec: LatticeSpec, kx, ky=None, variant: str = "linear",
             convention: str = "rotated", tol: float = DEFAULT_POLE_TOL) -> Bands2D:
    kx = np.atleast_1d(np.asarray(kx, dtype=float))
    ky = kx if ky is None else np.atleast_1d(np.asarray(ky, dtype=float))
    if variant == "linear":
        if not math.isclose(spec.qd.value, math.pi, abs_tol=1e-12):
            raise ValueError("the linearized Bloch matrix is defined only at qd = pi")

        def bloch(a, b):
            return bloch_hamiltonian_2d_linear(a, b, spec.delta_x, spec.delta_y,
                                               spec.gamma0, convention).matrix
    elif variant == "full":
        def bloch(a, b):
            return bloch_hamiltonian_2d_full(a, b, spec, convention, tol).matrix
    else:
        raise ValueError(f"unknown variant {variant!r}; expected 'linear' or 'full'")

    excluded = []

    def evaluate(a, b):
        try:
            return np.linalg.eigvalsh(bloch(a, b))
        except SingularK as err:
            excluded.append(((float(a), float(b)), str(err)))
            return np.full(3, np.nan)

    surfaces = np.array([[evaluate(a, b) for b in ky] for a in kx])
    n_grid_excluded = len(excluded)
    cut_kx0 = np.array([evaluate(0.0, b) for b in ky])
    cut_ky0 = np.array([evaluate(a, 0.0) for a in kx])
    return Bands2D(kx, ky, surfaces, tuple(excluded[:n_grid_excluded]), variant,
                   cut_kx0, cut_ky0, {"convention": convention})
