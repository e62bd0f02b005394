import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdbouss import decomposition as dec
from hdbouss.grid import Field, forward, inverse
from hdbouss.inequalities import random_field
from hdbouss.initial import random_state
from hdbouss.state import velocity_from_vorticity


def test_x1_independent_field_has_no_oscillation(small_grid):
    f = Field.from_function(small_grid, lambda x1, x2: np.exp(-(x2**2)) + 0 * x1)
    bar, til = dec.split(f)
    assert np.abs(til.values).max() < 1e-15
    np.testing.assert_allclose(bar.values, f.values, atol=1e-15)


def test_pure_oscillation_has_zero_average(small_grid):
    f = Field.from_function(small_grid, lambda x1, x2: np.sin(2 * np.pi * x1) * np.exp(-(x2**2)))
    assert np.abs(dec.horizontal_average(f).values).max() < 1e-16


def test_average_routes_agree(small_grid):
    f = random_field(small_grid, 3, band_limit=(6, 20))
    a = dec.horizontal_average(f).values
    b = dec.horizontal_average_quadrature(f).values
    assert np.abs(a - b).max() < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_split_is_orthogonal_and_complete(seed):
    from hdbouss import make_grid

    g = make_grid(n1=32, n2=64, half_width=10.0)
    f = random_field(g, seed, band_limit=(6, 20))
    bar, til = dec.split(f)
    np.testing.assert_allclose((bar + til).values, f.values, atol=1e-13)
    nf = dec.l2_norm(f) ** 2
    assert abs(dec.l2_inner(bar, til)) <= 1e-12 * nf
    assert abs(nf - dec.l2_norm(bar) ** 2 - dec.l2_norm(til) ** 2) <= 1e-11 * nf


def test_spectral_split_matches_field_split(small_grid):
    f = random_field(small_grid, 5, band_limit=(4, 20))
    s = forward(f)
    bar, til = dec.split(f)
    np.testing.assert_allclose(inverse(dec.average_spectrum(s)).values, bar.values, atol=1e-15)
    np.testing.assert_allclose(inverse(dec.oscillation_spectrum(s)).values, til.values, atol=1e-15)
    np.testing.assert_allclose(dec.oscillation(f).values, til.values, atol=1e-15)


def test_report_on_solver_velocity(grid):
    st_ = random_state(grid, seed=4, epsilon=1.0)
    u1, u2 = (inverse(x) for x in velocity_from_vorticity(st_))
    rep = dec.decomposition_report(u1, u2, inverse(st_.theta_hat))
    assert rep["flags"] == []
    assert rep["ubar2_max"] < 1e-12
    assert rep["pythagoras_residual_rel"] < 1e-11


def test_report_flags_violations(small_grid):
    # u2 with a nonzero average and a divergent velocity
    u1 = Field.from_function(small_grid, lambda x1, x2: np.exp(-(x2**2)) * np.sin(2 * np.pi * x1))
    u2 = Field.from_function(small_grid, lambda x1, x2: np.exp(-(x2**2)) + 0 * x1)
    rep = dec.decomposition_report(u1, u2, u1)
    assert {"div_bar_max", "div_tilde_max", "ubar2_max"} <= set(rep["flags"])


def test_profile(tmp_path, small_grid):
    p = dec.Profile(small_grid, np.exp(-(small_grid.x2_nodes**2)))
    assert p.broadcast().values.shape == small_grid.shape
    # x1-independent extension over a unit-width box
    assert p.l2_norm() == pytest.approx((np.pi / 2) ** 0.25, rel=1e-6)
    out = tmp_path / "p.csv"
    p.to_csv(out, "theta_bar")
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x2", "theta_bar"] and len(rows) == small_grid.n2 + 1
    with pytest.raises(ValueError):
        dec.Profile(small_grid, np.zeros(3))
    with pytest.raises(ValueError):
        dec.Profile(small_grid, np.full(small_grid.n2, np.nan))
