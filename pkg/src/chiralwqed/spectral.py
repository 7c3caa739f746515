"""Finite-lattice diagonalization: decay rates, darkest states, photonic weights."""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import LatticeHamiltonian, build_chain_hamiltonian
from .lattice import build_lattice_hamiltonian
from .model import ChainSpec, ChiralWQEDError, DefectiveMatrix, IndexLayout, LatticeSpec

log = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-8
# smallest singular value of the unit-column eigenvector matrix below which
# the computed eigenbasis is treated as numerically dependent (defective)
BASIS_DEPENDENCE_TOL = 1e-8

C_SUB = 0.1
C_SUPER = 0.5


class EigensolverError(ChiralWQEDError):
    pass


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    """Right eigenpairs with residual certificates.

    ``residuals[j] = ||H v_j - eps_j v_j||_2`` and ``norm`` is the spectral
    norm of ``H``; every residual is checked against ``RESIDUAL_RTOL * norm``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    norm: float
    min_gap: float
    basis_sigma_min: float
    defective_warning: bool
    layout: IndexLayout | None = None
    reason: str = ""

    @property
    def gammas(self) -> np.ndarray:
        return -self.eigenvalues.imag


def _min_pairwise_gap(w: np.ndarray) -> float:
    if w.size < 2:
        return float("inf")
    d = np.abs(w[:, None] - w[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def _structurally_defective(h: LatticeHamiltonian) -> bool:
    spec = h.spec
    return (isinstance(spec, ChainSpec) and spec.delta == 0.0 and spec.n_sites >= 2
            and h.layout.dimensionality == 1)


def eigendecompose(h) -> ComplexSpectrum:
    """Dense general eigendecomposition of a LatticeHamiltonian or square array.

    ``defective_warning`` is raised when the computed eigenvectors are
    numerically linearly dependent (``sigma_min(V) < BASIS_DEPENDENCE_TOL``),
    or when ``h`` is a decoupled chain (``delta == 0``, ``N >= 2``), which is
    a Jordan block pair by construction.
    """
    layout = h.layout if isinstance(h, LatticeHamiltonian) else None
    mat = np.asarray(h.matrix if isinstance(h, LatticeHamiltonian) else h, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eig(mat)
    except np.linalg.LinAlgError as err:
        raise EigensolverError(
            f"eigensolver failed on {mat.shape[0]}x{mat.shape[0]} matrix "
            f"(Frobenius norm {np.linalg.norm(mat):.3e}, cond {np.linalg.cond(mat):.3e}): {err}"
        ) from err
    v = v / np.linalg.norm(v, axis=0)
    norm = float(np.linalg.norm(mat, 2))
    residuals = np.linalg.norm(mat @ v - v * w, axis=0)
    sigma_min = float(np.linalg.svd(v, compute_uv=False)[-1])
    gap = _min_pairwise_gap(w)

    reasons = []
    if isinstance(h, LatticeHamiltonian) and _structurally_defective(h):
        reasons.append("decoupled chain (delta = 0) is a Jordan block pair")
    if sigma_min < BASIS_DEPENDENCE_TOL:
        reasons.append(f"eigenvector basis numerically dependent (sigma_min = {sigma_min:.2e})")
    if np.any(residuals > RESIDUAL_RTOL * max(norm, np.finfo(float).tiny)):
        reasons.append(f"residual {residuals.max():.2e} exceeds {RESIDUAL_RTOL:g} * ||H||")
    warn = bool(reasons)
    if warn:
        log.warning("defective spectrum: %s", "; ".join(reasons))
    return ComplexSpectrum(w, v, residuals, norm, gap, sigma_min, warn, layout, "; ".join(reasons))


def decay_rates(spectrum: ComplexSpectrum):
    """``(gammas, indices)`` with ``gammas`` ascending and ``indices`` into the spectrum."""
    g = spectrum.gammas
    order = np.argsort(g, kind="stable")
    return g[order], order


@dataclass(frozen=True, eq=False)
class DecayClassification:
    gammas: np.ndarray
    classes: tuple
    c_sub: float
    c_super: float
    n_sites: int
    gamma0: float

    def thresholds(self) -> dict:
        return {"c_sub": self.c_sub, "c_super": self.c_super,
                "subradiant_below": self.c_sub * self.gamma0,
                "superradiant_above": self.c_super * self.n_sites * self.gamma0}

    def counts(self) -> dict:
        return {name: self.classes.count(name) for name in ("subradiant", "bright", "superradiant")}


def classify_decay(spectrum: ComplexSpectrum, n_sites: int, gamma0: float = 1.0,
                   c_sub: float = C_SUB, c_super: float = C_SUPER) -> DecayClassification:
    """Subradiant below ``c_sub*gamma0``, superradiant above ``c_super*N*gamma0``.

    ``N`` is the linear size (chain length, or lattice side).
    """
    g = spectrum.gammas
    classes = tuple(
        "subradiant" if x < c_sub * gamma0
        else "superradiant" if x > c_super * n_sites * gamma0
        else "bright"
        for x in g
    )
    return DecayClassification(g, classes, c_sub, c_super, n_sites, gamma0)


def darkest_index(spectrum: ComplexSpectrum, rtol: float = 1e-12) -> int:
    """Index of minimal decay rate; ties by smallest ``|Re eps|`` then lowest index."""
    w = spectrum.eigenvalues
    g = -w.imag
    tied = np.flatnonzero(g <= g.min() + rtol * max(1.0, abs(g.min())))
    re = np.abs(w.real[tied])
    best = tied[re <= re.min() + rtol * max(1.0, re.min())]
    return int(best.min())


def darkest_state(spectrum: ComplexSpectrum):
    if spectrum.eigenvalues.size == 0:
        raise ValueError("empty spectrum")
    if spectrum.defective_warning:
        raise DefectiveMatrix(
            f"{spectrum.reason}; numerical eigenvectors are not meaningful here. "
            "For the decoupled chain use chain.triangular_block_spectrum and "
            "chain.edge_eigenvectors instead."
        )
    j = darkest_index(spectrum)
    return complex(spectrum.eigenvalues[j]), spectrum.eigenvectors[:, j]


@dataclass(frozen=True, eq=False)
class PhotonicDistribution:
    """``|psi|^2`` per (site, polarization), shape ``(n_site_total, orbitals)``."""

    probabilities: np.ndarray
    layout: IndexLayout

    def weight(self, site, pol) -> float:
        return float(self.probabilities.reshape(-1)[self.layout.row_of(site, pol)])

    def grid(self) -> np.ndarray:
        """2D only: array indexed ``[ix, iy, pol]``."""
        n = self.layout.n_sites
        if self.layout.dimensionality != 2:
            raise ValueError("grid() is defined for 2D layouts")
        return self.probabilities.reshape(n, n, 3)


def photonic_distribution(vector, layout: IndexLayout) -> PhotonicDistribution:
    psi = np.asarray(vector, dtype=complex).ravel()
    if psi.size != layout.dim:
        raise ValueError(f"vector has {psi.size} entries, layout expects {layout.dim}")
    p = np.abs(psi) ** 2
    total = p.sum()
    if total == 0:
        raise ValueError("cannot normalize a zero vector")
    return PhotonicDistribution((p / total).reshape(layout.n_site_total, layout.orbitals_per_site),
                                layout)


@dataclass(frozen=True)
class SweepRow:
    n_sites: int
    gamma_min: float
    darkest_energy: complex
    gammas: tuple | None = None


def _build(template, n, convention="rotated"):
    spec = dataclasses.replace(template, n_sites=int(n))
    if isinstance(spec, ChainSpec):
        return build_chain_hamiltonian(spec)
    if isinstance(spec, LatticeSpec):
        return build_lattice_hamiltonian(spec, convention)
    raise TypeError(f"unsupported spec type {type(template).__name__}")


def _sweep_one(template, n, keep_all, convention="rotated"):
    spectrum = eigendecompose(_build(template, n, convention))
    eps, _ = darkest_state(spectrum)
    gam = tuple(float(x) for x in np.sort(spectrum.gammas)) if keep_all else None
    return SweepRow(int(n), float(-eps.imag), eps, gam)


def size_sweep(template, n_list, keep_all: bool = False, workers: int | None = None,
               convention: str = "rotated") -> list:
    """Darkest decay rate for each size in ``n_list`` (rows in ascending N).

    1D templates must have ``delta != 0``: the decoupled chain has no
    numerically meaningful eigenbasis.
    """
    ns = sorted({int(n) for n in n_list})
    if not ns:
        raise ValueError("n_list is empty")
    if isinstance(template, ChainSpec) and template.delta == 0.0:
        raise DefectiveMatrix("1D size sweeps need delta != 0; the delta = 0 chain is defective")
    for n in ns:
        dataclasses.replace(template, n_sites=n)  # validates every N up front
    if workers == 1 or len(ns) == 1:
        return [_sweep_one(template, n, keep_all, convention) for n in ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: _sweep_one(template, n, keep_all, convention), ns))
