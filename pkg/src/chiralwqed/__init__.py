"""Qubit arrays coupled through chiral waveguides: effective Hamiltonians,
Markovian and exact band structures, and finite-size radiative spectra."""

__version__ = "0.1.0"

import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())

from .analysis import BandMetrics, FitError, PowerLawFit, band_metrics, fit_power_law
from .chain import (
    BandSet,
    BlochMatrix,
    LatticeHamiltonian,
    bloch_hamiltonian_1d,
    build_chain_hamiltonian,
    edge_eigenvectors,
    k_grid,
    markov_bands_1d,
    triangular_block_spectrum,
)
from .exact import (
    compare_dispersions,
    dispersion_rhs,
    exact_bands_1d,
    scatterer_response,
    scattering_coefficients,
    solve_exact_bands,
    transfer_matrix,
)
from .lattice import (
    Bands2D,
    bands_2d,
    bloch_hamiltonian_2d_full,
    bloch_hamiltonian_2d_linear,
    build_lattice_hamiltonian,
)
from .model import (
    ChainSpec,
    ChiralWQEDError,
    DefectiveMatrix,
    DegenerateScatterer,
    IndexLayout,
    LatticeSpec,
    PhaseParseError,
    PhaseQd,
    Polarization1D,
    Polarization2D,
    ResonancePole,
    SingularK,
    parse_phase,
)
from .spectral import (
    ComplexSpectrum,
    classify_decay,
    darkest_state,
    decay_rates,
    eigendecompose,
    photonic_distribution,
    size_sweep,
)
from .tables import Column, ResultTable, read_table, write_table
from .plotting import render_plot

__all__ = [name for name in dir() if not name.startswith("_")]
