import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chiralwqed.model import (ChainSpec, IndexLayout, LatticeSpec, PhaseParseError, PhaseQd,
                              Polarization1D, Polarization2D, heaviside_half, parse_phase)


@pytest.mark.parametrize("n, expected", [(3, 1.0), (0, 0.5), (-2, 0.0)])
def test_heaviside_half_values(n, expected):
    assert heaviside_half(n) == expected


@given(st.integers(-10 ** 6, 10 ** 6))
def test_heaviside_half_complement(n):
    assert heaviside_half(n) + heaviside_half(-n) == 1.0


def test_parse_symbolic_phases():
    p = parse_phase("pi")
    assert p.exact and p.value == math.pi
    assert p.sin() == 0.0 and p.cos() == -1.0
    half = parse_phase("pi/2")
    assert half.cos() == 0.0 and half.sin() == 1.0
    full = parse_phase("2pi")
    assert full.value == 2 * math.pi and full.sin() == 0.0 and full.cos() == 1.0


def test_parse_decimal_phase_is_inexact():
    p = parse_phase("1.5707963267948966")
    assert not p.exact
    assert p.value == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("bad", ["two-pi", "", "pi/3", "1.0.0", "nan"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(PhaseParseError) as info:
        parse_phase(bad)
    assert info.value.token == bad


def test_phase_reduction_into_half_open_interval():
    assert PhaseQd(0.0).value == pytest.approx(2 * math.pi)
    assert PhaseQd(-math.pi / 2).value == pytest.approx(1.5 * math.pi)
    assert PhaseQd(5 * math.pi).value == pytest.approx(math.pi)


def test_exact_phase_powers():
    p = parse_phase("pi/2")
    np.testing.assert_array_equal(p.phase_powers(np.arange(5)), [1, 1j, -1, -1j, 1])
    q = parse_phase("pi")
    np.testing.assert_array_equal(q.phase_powers(np.arange(4)), [1, -1, 1, -1])


@pytest.mark.parametrize("kwargs", [
    dict(n_sites=0, qd="pi"), dict(n_sites=2.5, qd="pi"), dict(n_sites=3, qd="pi", gamma0=0.0),
    dict(n_sites=3, qd="pi", delta=float("inf")), dict(n_sites=True, qd="pi"),
])
def test_chain_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ChainSpec(**kwargs)


def test_lattice_spec_validation_and_coercion():
    s = LatticeSpec(3, "pi", 0.1, 0.2)
    assert s.qd.exact and s.delta_y == 0.2
    with pytest.raises(ValueError):
        LatticeSpec(2, "pi", float("nan"))
    assert s.as_dict() == {"n_sites": 3, "qd": "pi", "delta_x": 0.1, "delta_y": 0.2, "gamma0": 1.0}


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("n", range(1, 9))
def test_layout_bijection(dim, n):
    lay = IndexLayout(dim, n)
    seen = set()
    pols = Polarization1D if dim == 1 else Polarization2D
    sites = range(n) if dim == 1 else [(i, j) for i in range(n) for j in range(n)]
    for s in sites:
        for p in pols:
            r = lay.row_of(s, p)
            assert lay.site_pol_of(r) == (s, p)
            seen.add(r)
    assert seen == set(range(lay.dim))


def test_layout_bounds():
    lay = IndexLayout(2, 3)
    with pytest.raises(IndexError):
        lay.row_of((3, 0), 0)
    with pytest.raises(IndexError):
        lay.site_pol_of(lay.dim)
