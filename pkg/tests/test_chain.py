import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralwqed.chain import (bloch_hamiltonian_1d, build_chain_hamiltonian, check_chiral_poles,
                              edge_eigenvectors, half_cot, k_grid, markov_bands_1d,
                              triangular_block_spectrum)
from chiralwqed.model import ChainSpec, PhaseQd, Polarization1D, SingularK, parse_phase

from oracles import damped_series_cot, eig2_symmetric, naive_chain

R, L = Polarization1D.R, Polarization1D.L


def test_single_site_matrix():
    h = build_chain_hamiltonian(ChainSpec(1, "pi", 0.3)).matrix
    np.testing.assert_allclose(h, [[-0.25j, 0.3], [0.3, -0.25j]], atol=0, rtol=0)


def test_two_site_blocks_at_pi():
    h = build_chain_hamiltonian(ChainSpec(2, "pi", 0.0))
    np.testing.assert_array_equal(h.block(R, R), [[-0.25j, 0], [0.5j, -0.25j]])
    np.testing.assert_array_equal(h.block(L, L), h.block(R, R).T)


def test_three_sites_match_loop_construction_exactly():
    h = build_chain_hamiltonian(ChainSpec(3, "pi/2", 0.1)).matrix
    ref = naive_chain(3, math.pi / 2, 0.1)
    assert np.max(np.abs(h - ref)) <= 1e-15


def test_photon_part_transposes_and_detuning_part_is_symmetric():
    spec = ChainSpec(5, 0.7, 0.4, 1.3)
    h = build_chain_hamiltonian(spec)
    np.testing.assert_array_equal(h.block(L, L), h.block(R, R).T)
    np.testing.assert_array_equal(h.block(R, L), h.block(L, R).T)
    np.testing.assert_array_equal(h.block(R, L), 0.4 * np.eye(5))


@given(st.floats(0.1, 10), st.floats(-2, 2), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_gamma0_scaling(s, delta, n):
    """Photon-mediated entries scale with gamma0; detuning entries do not."""
    a = build_chain_hamiltonian(ChainSpec(n, 1.1, delta, 1.0))
    b = build_chain_hamiltonian(ChainSpec(n, 1.1, delta, s))
    np.testing.assert_allclose(b.block(R, R), s * a.block(R, R), rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(b.block(L, L), s * a.block(L, L), rtol=1e-14, atol=1e-15)
    np.testing.assert_array_equal(b.block(R, L), a.block(R, L))


def test_bloch_at_zone_center_qd_pi():
    np.testing.assert_array_equal(bloch_hamiltonian_1d(0.0, ChainSpec(1, "pi", 0.2)).matrix,
                                  [[0.0, 0.2], [0.2, 0.0]])


def test_bloch_pole_raises():
    with pytest.raises(SingularK) as info:
        bloch_hamiltonian_1d(math.pi / 2, ChainSpec(1, "pi/2"))
    assert info.value.k == math.pi / 2


def test_bloch_quarter_point_against_series():
    h = bloch_hamiltonian_1d(math.pi / 2, ChainSpec(1, "pi", 0.0)).matrix
    np.testing.assert_allclose(np.diag(h), [0.25, -0.25], atol=1e-15)
    series = [damped_series_cot(math.pi - math.pi / 2), damped_series_cot(math.pi + math.pi / 2)]
    np.testing.assert_allclose(np.diag(h), series, atol=1e-3)


@pytest.mark.parametrize("qd", [math.pi / 2, math.pi, 2 * math.pi, 0.9, 4.0])
@pytest.mark.parametrize("kd", [-2.5, -1.0, 0.3, 1.9, 3.0])
def test_cotangent_entries_equal_damped_series(qd, kd):
    # the damped sum converges like eta / sin^2(theta/2); stay clear of the poles
    if min(abs(math.sin((qd - kd) / 2)), abs(math.sin((qd + kd) / 2))) < 0.25:
        pytest.skip("too close to a pole for eta = 1e-4")
    h = bloch_hamiltonian_1d(kd, ChainSpec(1, qd)).matrix
    assert abs(h[0, 0] - damped_series_cot(qd - kd)) <= 1e-3
    assert abs(h[1, 1] - damped_series_cot(qd + kd)) <= 1e-3


@given(st.floats(-math.pi, math.pi), st.floats(0.01, 2 * math.pi), st.floats(-2, 2))
@settings(max_examples=200, deadline=None)
def test_bloch_matrix_is_real_symmetric(kd, qd, delta):
    try:
        m = bloch_hamiltonian_1d(kd, ChainSpec(1, qd, delta)).matrix
    except SingularK:
        return
    assert np.isrealobj(m)
    assert np.array_equal(m, m.T)


def test_half_cot_is_accurate_near_partner_pole():
    """The non-singular branch stays accurate when the other one is close to its pole."""
    qd = parse_phase("pi")
    cr, cl = half_cot(qd, math.pi - 1e-5)
    assert cl == pytest.approx(1.0 / math.tan((math.pi + math.pi - 1e-5) / 2), rel=1e-9)
    assert cr == pytest.approx(1.0 / math.tan(0.5e-5), rel=1e-9)


def test_pole_check_uses_periodic_distance():
    with pytest.raises(SingularK):
        check_chiral_poles(-math.pi + 1e-8, PhaseQd.coerce("pi"), 1e-6)
    check_chiral_poles(0.1, PhaseQd.coerce("pi"), 1e-6)


def test_k_grid_convention():
    ks = k_grid(4)
    np.testing.assert_allclose(ks, [-math.pi / 2, 0, math.pi / 2, math.pi])
    assert ks[-1] == math.pi
    with pytest.raises(ValueError):
        k_grid(1)


@pytest.mark.parametrize("qd", ["pi", "pi/2", "2pi", "0.8"])
def test_decoupled_bands_are_the_cotangent_diagonals(qd):
    spec = ChainSpec(1, qd, 0.0)
    b = markov_bands_1d(spec, 64)
    p = spec.qd.value
    for j, kd in enumerate(b.k):
        diag = sorted([0.25 / math.tan((p - kd) / 2), 0.25 / math.tan((p + kd) / 2)])
        np.testing.assert_allclose(b.bands[:, j], diag, rtol=1e-9, atol=1e-12)


def test_markov_bands_at_zone_center():
    # an even point count puts kd = 0 on the grid
    b = markov_bands_1d(ChainSpec(1, "pi", 0.2), 200)
    j = int(np.argmin(np.abs(b.k)))
    assert b.k[j] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(b.bands[:, j], [-0.2, 0.2], atol=1e-15)


@pytest.mark.parametrize("qd, delta", [("pi", 0.2), ("pi/2", 0.5), ("1.3", -0.7), ("2pi", 0.05)])
def test_markov_bands_match_closed_form_quadratic(qd, delta):
    spec = ChainSpec(1, qd, delta)
    b = markov_bands_1d(spec, 101)
    for j, kd in enumerate(b.k):
        m = bloch_hamiltonian_1d(kd, spec).matrix
        np.testing.assert_allclose(b.bands[:, j], eig2_symmetric(m[0, 0], m[0, 1], m[1, 1]),
                                   rtol=1e-12, atol=1e-12)


def test_excluded_points_are_reported():
    b = markov_bands_1d(ChainSpec(1, "pi/2", 0.1), 4)
    assert [round(k, 12) for k, _ in b.excluded] == [round(-math.pi / 2, 12), round(math.pi / 2, 12)]
    assert b.k.size == 2
    assert all("pole" in why for _, why in b.excluded)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
@pytest.mark.parametrize("qd", ["pi", "pi/2", "0.4"])
def test_triangular_spectrum_identity(n, qd):
    h = build_chain_hamiltonian(ChainSpec(n, qd, 0.0, 1.7))
    diag = triangular_block_spectrum(h)
    assert diag.size == 2 * n
    np.testing.assert_array_equal(diag, np.full(2 * n, -1.7j / 4))


def test_triangular_spectrum_needs_decoupling():
    assert triangular_block_spectrum(build_chain_hamiltonian(ChainSpec(3, "pi", 0.1))) is None


@pytest.mark.parametrize("n", [1, 2, 4, 12])
@pytest.mark.parametrize("qd", ["pi", "pi/2", "2.2"])
def test_edge_eigenvectors_localize_at_ends(n, qd):
    h = build_chain_hamiltonian(ChainSpec(n, qd, 0.0))
    vecs = edge_eigenvectors(h)
    vr, vl = vecs[R], vecs[L]
    er = np.zeros(2 * n)
    er[2 * (n - 1) + R] = 1
    el = np.zeros(2 * n)
    el[L] = 1
    np.testing.assert_allclose(np.abs(vr), er, atol=1e-15)
    np.testing.assert_allclose(np.abs(vl), el, atol=1e-15)
    for v in (vr, vl):
        np.testing.assert_allclose(h.matrix @ v, -0.25j * v, atol=1e-15)
