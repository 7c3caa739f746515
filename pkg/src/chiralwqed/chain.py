"""Finite 1D chains and their Markovian Bloch bands.

The real-space Hamiltonian couples the R polarization strictly left-to-right and
the L polarization right-to-left; ``delta`` mixes R and L on the same site. With
``delta == 0`` the matrix is block triangular with a constant diagonal, i.e. a
pair of Jordan blocks. Dense eigensolvers return ``O(eps**(1/N))`` garbage on
such matrices, so :func:`triangular_block_spectrum` and
:func:`edge_eigenvectors` provide the exact answers by structure instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ChainSpec, IndexLayout, PhaseQd, Polarization1D, SingularK, heaviside_half

DEFAULT_POLE_TOL = 1e-6

_P_R = np.diag([1.0, 0.0])
_P_L = np.diag([0.0, 1.0])
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class LatticeHamiltonian:
    """Dense effective Hamiltonian with its row layout and generating spec."""

    matrix: np.ndarray
    layout: IndexLayout
    spec: object
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def block(self, pol_row, pol_col) -> np.ndarray:
        """Site-by-site view of the ``(pol_row, pol_col)`` polarization block."""
        k = self.layout.orbitals_per_site
        return self.matrix[int(pol_row)::k, int(pol_col)::k]


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    k: tuple
    matrix: np.ndarray
    variant: str


@dataclass(frozen=True, eq=False)
class BandSet:
    """Bands sampled on a strictly increasing grid.

    ``bands`` has shape ``(n_bands, len(k))`` and is sorted along axis 0;
    singular grid points are left out of ``k`` and listed in ``excluded``.
    """

    k: np.ndarray
    bands: np.ndarray
    excluded: tuple = ()

    def points(self) -> np.ndarray:
        return self.bands.T


def chiral_kernel(n_sites: int, qd: PhaseQd, gamma0: float) -> np.ndarray:
    """``K[m, n] = -i (gamma0/2) Theta(m-n) exp(i qd |m-n|)``, lower triangular."""
    idx = np.arange(n_sites)
    sep = idx[:, None] - idx[None, :]
    step = np.where(sep > 0, 1.0, np.where(sep == 0, heaviside_half(0), 0.0))
    return -0.5j * gamma0 * step * qd.phase_powers(np.abs(sep))


def build_chain_hamiltonian(spec: ChainSpec) -> LatticeHamiltonian:
    kern = chiral_kernel(spec.n_sites, spec.qd, spec.gamma0)
    h = (np.kron(kern, _P_R) + np.kron(kern.T, _P_L)
         + spec.delta * np.kron(np.eye(spec.n_sites), _SIGMA_X))
    return LatticeHamiltonian(h, IndexLayout(1, spec.n_sites), spec)


def _phase_distance(a: float, b: float) -> float:
    d = math.fmod(a - b, 2.0 * math.pi)
    return min(abs(d), 2.0 * math.pi - abs(d))


def check_chiral_poles(k: float, qd: PhaseQd, tol: float, label: str = "k") -> None:
    """Raise SingularK if ``k`` is within ``tol`` of ``+qd`` or ``-qd`` (mod 2pi)."""
    for sign, which in ((1.0, f"cot((qd-{label})/2)"), (-1.0, f"cot((qd+{label})/2)")):
        pole = math.remainder(sign * qd.value, 2.0 * math.pi)
        if _phase_distance(k, pole) < tol:
            raise SingularK(k, pole, which)


def _cot_half(sin_x, cos_x):
    # cot(x/2) = (1 + cos x)/sin x = sin x/(1 - cos x); pick the cancellation-free one
    sin_x, cos_x = np.asarray(sin_x, float), np.asarray(cos_x, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cos_x >= 0, (1.0 + cos_x) / sin_x, sin_x / (1.0 - cos_x))


def half_cot(qd: PhaseQd, k):
    """``(cot((qd-k)/2), cot((qd+k)/2))`` built from the exact sin/cos of ``qd``."""
    s, c = qd.sin(), qd.cos()
    sk, ck = np.sin(k), np.cos(k)
    minus = _cot_half(s * ck - c * sk, c * ck + s * sk)
    plus = _cot_half(s * ck + c * sk, c * ck - s * sk)
    if np.ndim(minus) == 0:
        return float(minus), float(plus)
    return minus, plus


def bloch_hamiltonian_1d(kd: float, spec: ChainSpec, tol: float = DEFAULT_POLE_TOL) -> BlochMatrix:
    check_chiral_poles(kd, spec.qd, tol)
    cot_r, cot_l = half_cot(spec.qd, kd)
    g = spec.gamma0 / 4.0
    h = np.array([[g * cot_r, spec.delta], [spec.delta, g * cot_l]], dtype=float)
    return BlochMatrix((float(kd),), h, "markov")


def k_grid(k_points: int) -> np.ndarray:
    """Uniform grid over ``(-pi, pi]`` including the right endpoint."""
    if k_points < 2:
        raise ValueError(f"k_points must be >= 2, got {k_points}")
    return np.linspace(-math.pi, math.pi, k_points + 1)[1:]


def markov_bands_1d(spec: ChainSpec, k_points: int, tol: float = DEFAULT_POLE_TOL) -> BandSet:
    ks, values, excluded = [], [], []
    for kd in k_grid(k_points):
        try:
            h = bloch_hamiltonian_1d(kd, spec, tol).matrix
        except SingularK as err:
            excluded.append((float(kd), str(err)))
            continue
        ks.append(kd)
        values.append(np.linalg.eigvalsh(h))
    bands = np.array(values).T if values else np.empty((2, 0))
    return BandSet(np.array(ks), bands, tuple(excluded))


def triangular_block_spectrum(h: LatticeHamiltonian, atol: float = 0.0):
    """Eigenvalue multiset read off the structure of a decoupled chain.

    Returns ``None`` unless the R and L blocks are uncoupled and the R block is
    lower and the L block upper triangular (``delta == 0``). No numerical
    eigendecomposition is involved.
    """
    R, L = Polarization1D.R, Polarization1D.L
    off = np.concatenate([h.block(R, L).ravel(), h.block(L, R).ravel()])
    if np.any(np.abs(off) > atol):
        return None
    hr, hl = h.block(R, R), h.block(L, L)
    if np.any(np.abs(np.triu(hr, 1)) > atol) or np.any(np.abs(np.tril(hl, -1)) > atol):
        return None
    return np.concatenate([np.diag(hr), np.diag(hl)])


def triangular_null_vector(t: np.ndarray, lower: bool = True) -> np.ndarray:
    """Null vector of a triangular matrix with zero diagonal by substitution.

    For a strictly lower triangular ``t`` whose first subdiagonal has no
    zeros, row ``i`` forces ``x[i-1] = 0`` given the earlier entries, so only
    the last component is free. Upper triangular input is handled by reversal.
    """
    t = np.asarray(t)
    n = t.shape[0]
    if not lower:
        return triangular_null_vector(t[::-1, ::-1], lower=True)[::-1]
    if np.any(np.triu(t) != 0):
        raise ValueError("expected a strictly lower triangular matrix")
    x = np.zeros(n, dtype=complex)
    x[n - 1] = 1.0
    for i in range(1, n):
        pivot = t[i, i - 1]
        if pivot == 0:
            raise ValueError(f"zero subdiagonal entry at row {i}; null space not one-dimensional")
        # row i: sum_{j < i} t[i, j] x[j] = 0, solve for x[i-1]; x[n-1] stays free
        if i - 1 < n - 1:
            x[i - 1] = -(t[i, : i - 1] @ x[: i - 1]) / pivot
    return x


def edge_eigenvectors(h: LatticeHamiltonian) -> dict:
    """Exact right eigenvectors of the decoupled (``delta == 0``) chain.

    Returns ``{Polarization1D.R: v_R, Polarization1D.L: v_L}`` as full-length
    vectors in the layout of ``h``.
    """
    diag = triangular_block_spectrum(h)
    if diag is None:
        raise ValueError("edge eigenvectors are exact only for the decoupled chain (delta == 0)")
    n = h.layout.n_sites
    out = {}
    for pol, lower in ((Polarization1D.R, True), (Polarization1D.L, False)):
        blk = h.block(pol, pol)
        shifted = blk - blk[0, 0] * np.eye(n)
        if n == 1:
            local = np.ones(1, dtype=complex)
        elif lower:
            local = triangular_null_vector(np.tril(shifted, -1), lower=True)
        else:
            local = triangular_null_vector(np.triu(shifted, 1), lower=False)
        v = np.zeros(h.dim, dtype=complex)
        v[int(pol)::2] = local
        out[pol] = v / np.linalg.norm(v)
    return out
