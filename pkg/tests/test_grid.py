import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hdbouss.grid import (
    Field,
    GridSpec,
    Spectrum,
    dealias,
    derivative,
    forward,
    inverse,
    l2_norm_sq_spectral,
    make_grid,
    solve_streamfunction,
    transform,
)

SMALL = make_grid(n1=16, n2=32, half_width=5.0)


@pytest.mark.parametrize("kw", [
    dict(n1=7, n2=16, half_width=1.0),
    dict(n1=16, n2=6, half_width=1.0),
    dict(n1=16, n2=16, half_width=0.0),
    dict(n1=16, n2=16, half_width=float("inf")),
    dict(n1=16, n2=16, half_width=1.0, dealias_fraction=0.0),
    dict(n1=16, n2=16, half_width=1.0, dealias_fraction=1.5),
])
def test_gridspec_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_nodes_and_tables(small_grid):
    g = small_grid
    assert g.x1_nodes[0] == 0 and g.x1_nodes[-1] == pytest.approx(1 - 1 / g.n1)
    assert g.x2_nodes[0] == -g.L and g.x2_nodes[-1] == pytest.approx(g.L - 2 * g.L / g.n2)
    assert list(g.m1_table[:2]) == [-g.n1 // 2, -g.n1 // 2 + 1]
    np.testing.assert_allclose(g.k2_table, np.pi * g.m2_table / g.L)
    # 2/3 rule: n1 = 32 keeps |m1| <= 10, n2 = 64 keeps |m2| <= 21
    assert g.dealias_mask[:, :11].any() and not g.dealias_mask[:, 11:].any()
    assert g.dealias_mask[21, 0] and not g.dealias_mask[22, 0]


def test_grid_arrays_are_read_only(small_grid):
    with pytest.raises(ValueError):
        small_grid.k1[0, 0] = 1.0


def test_zero_transform():
    s = forward(Field.zeros(SMALL))
    assert not np.any(s.coeffs)
    assert not np.any(inverse(Spectrum.zeros(SMALL)).values)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, SMALL.shape, elements=st.floats(-1e3, 1e3)))
def test_round_trip(values):
    f = Field(SMALL, values)
    back = inverse(forward(f)).values
    scale = max(np.abs(values).max(), 1.0)
    assert np.abs(back - values).max() <= 1e-12 * scale


def test_single_mode_coefficient():
    g = SMALL
    f = Field.from_function(g, lambda x1, x2: np.cos(2 * np.pi * 3 * x1))
    s = forward(f)
    assert s.coeff(3, 0) == pytest.approx(0.5)
    assert s.coeff(-3, 0) == pytest.approx(0.5)
    assert abs(s.coeff(2, 0)) < 1e-15
    full = s.full()
    assert full[0, 3] == pytest.approx(0.5) and full[0, -3] == pytest.approx(0.5)


def test_coefficient_sign_convention():
    g = SMALL
    # exp(i pi m2 (x2 + L) / L) basis: sin(pi x2 / L) has coefficient at m2 = +-1
    f = Field.from_function(g, lambda x1, x2: np.sin(np.pi * (x2 + g.L) / g.L))
    s = forward(f)
    assert s.coeff(0, 1) == pytest.approx(-0.5j)
    assert s.coeff(0, -1) == pytest.approx(0.5j)


@pytest.mark.parametrize("axis,order", [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3)])
def test_derivative_matches_analytic(grid, axis, order):
    g = grid
    X1, X2 = g.mesh
    a = 2 * np.pi
    s = np.sin(a * X1)
    e = np.exp(-(X2**2))
    f = forward(Field(g, s * e))
    if axis == 1:
        exact = [a * np.cos(a * X1), -a**2 * s, -(a**3) * np.cos(a * X1)][order - 1] * e
    else:
        exact = s * [-2 * X2 * e, (4 * X2**2 - 2) * e][order - 1]
    got = inverse(derivative(f, axis, order)).values
    assert np.abs(got - exact).max() <= 1e-10 * max(1.0, a**order)


def test_odd_derivative_zeroes_nyquist():
    g = SMALL
    c = np.zeros(g.spectral_shape, dtype=complex)
    c[0, -1] = 1.0
    c[g.n2 // 2, 0] = 1.0
    d1 = derivative(Spectrum(g, c), 1)
    d2 = derivative(Spectrum(g, c), 2)
    assert d1.coeffs[0, -1] == 0 and d2.coeffs[g.n2 // 2, 0] == 0
    assert derivative(Spectrum(g, c), 1, 2).coeffs[0, -1] != 0


@pytest.mark.parametrize("order", [0, -1, 1.5])
def test_derivative_rejects_bad_order(order):
    with pytest.raises(ValueError):
        derivative(Spectrum.zeros(SMALL), 1, order)


def test_derivative_rejects_bad_axis():
    with pytest.raises(ValueError):
        derivative(Spectrum.zeros(SMALL), 3)


def test_parseval(small_grid):
    rng = np.random.default_rng(0)
    f = Field(small_grid, rng.normal(size=small_grid.shape))
    direct = np.sum(f.values**2) * small_grid.cell
    assert l2_norm_sq_spectral(forward(f).coeffs, small_grid) == pytest.approx(direct, rel=1e-13)


def test_streamfunction_inverts_laplacian(small_grid):
    g = small_grid
    rng = np.random.default_rng(1)
    w = dealias(forward(Field(g, rng.normal(size=g.shape))))
    psi = solve_streamfunction(w)
    lap = -g.ksq * psi.coeffs
    expected = w.coeffs.copy()
    expected[0, 0] = 0.0
    assert np.abs(lap - expected).max() < 1e-14
    assert psi.coeffs[0, 0] == 0


def test_transform_direction_checks():
    f = Field.zeros(SMALL)
    s = transform(f, "forward")
    assert isinstance(transform(s, "inverse"), Field)
    with pytest.raises(TypeError):
        transform(s, "forward")
    with pytest.raises(TypeError):
        transform(f, "inverse")
    with pytest.raises(ValueError):
        transform(f, "sideways")


def test_forward_rejects_non_finite():
    v = np.zeros(SMALL.shape)
    v[3, 4] = math.nan
    with pytest.raises(ValueError):
        forward(Field(SMALL, v))


def test_shape_and_grid_mismatch():
    with pytest.raises(ValueError):
        Field(SMALL, np.zeros((3, 3)))
    other = make_grid(n1=16, n2=32, half_width=6.0)
    with pytest.raises(ValueError):
        Field.zeros(SMALL) + Field.zeros(other)


def test_hermitian_defect_of_real_field(small_grid):
    rng = np.random.default_rng(2)
    s = forward(Field(small_grid, rng.normal(size=small_grid.shape)))
    assert s.hermitian_defect() < 1e-15


def test_grid_equality_by_spec():
    assert make_grid(n1=16, n2=32, half_width=5.0) == SMALL
    assert hash(make_grid(n1=16, n2=32, half_width=5.0)) == hash(SMALL)
    assert make_grid(n1=16, n2=32, half_width=4.0) != SMALL
