"""Initial data for the presets.

Every builder returns a State whose spectra lie inside the dealias mask and
whose vorticity has zero mean. Data meant for small-data runs are scaled so
that ||u0||_H2 + ||theta0||_H2 = epsilon, split evenly between u and theta
when both are present.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Field, Grid, Spectrum, derivative, forward
from .inequalities import random_field
from .state import NormWeights, State, _sq

IC_PRESETS = ("zero", "gaussian_pair", "single_mode", "heat_pulse", "plane_wave", "random")


def von_mises(x1, beta: float = 1.0, shift: float = 0.0):
    """exp(beta (cos 2pi(x1 - shift) - 1)): smooth, periodic, fast-decaying spectrum."""
    return np.exp(beta * (np.cos(2 * np.pi * (x1 - shift)) - 1.0))


def _masked(s: Spectrum) -> Spectrum:
    c = np.where(s.grid.dealias_mask, s.coeffs, 0.0)
    return Spectrum(s.grid, c)


def _h2(s: Spectrum, which: str) -> float:
    nw = NormWeights(s.grid)
    wgt = nw.h2_u if which == "u" else nw.h2_theta
    return math.sqrt(float(np.sum(wgt * _sq(s.coeffs))))


def scale_to_epsilon(omega: Spectrum, theta: Spectrum, epsilon: float) -> State:
    """Scale so that ||u||_H2 + ||theta||_H2 = epsilon, each part carrying an equal share."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    nu_, nt_ = _h2(omega, "u"), _h2(theta, "theta")
    parts = int(nu_ > 0) + int(nt_ > 0)
    if parts == 0:
        return State(omega, theta)
    share = epsilon / parts
    w = omega * (share / nu_) if nu_ > 0 else omega
    t = theta * (share / nt_) if nt_ > 0 else theta
    return State(w, t)


def _zero_mean(s: Spectrum) -> Spectrum:
    c = s.coeffs.copy()
    c[0, 0] = 0.0
    return Spectrum(s.grid, c)


def zero(grid: Grid, **_) -> State:
    return State.zeros(grid)


def gaussian_pair(grid: Grid, epsilon: float = 1e-2, beta: float = 1.0,
                  sigma: float = 1.0, separation: float = 1.0, **_) -> State:
    """Vortex dipole stacked in x2 plus a temperature blob.

    omega = [G(x2 - d) - G(x2 + d)] vM(x1), theta = G(x2) vM(x1 - 1/4) with
    G(s) = exp(-s^2/sigma^2); the dipole has zero mean by antisymmetry.
    """
    d = separation

    def G(s):
        return np.exp(-(s**2) / sigma**2)

    w = Field.from_function(grid, lambda x1, x2: (G(x2 - d) - G(x2 + d)) * von_mises(x1, beta))
    th = Field.from_function(grid, lambda x1, x2: G(x2) * von_mises(x1, beta, 0.25))
    return scale_to_epsilon(_zero_mean(_masked(forward(w))), _masked(forward(th)), epsilon)


def heat_pulse(grid: Grid, epsilon: float = 1e-2, sigma: float = 1.0, **_) -> State:
    """omega = 0, theta = epsilon sin(2 pi x1) exp(-x2^2/sigma^2): a single k1 = 2 pi mode."""
    th = Field.from_function(
        grid, lambda x1, x2: epsilon * np.sin(2 * np.pi * x1) * np.exp(-(x2**2) / sigma**2))
    return State(Spectrum.zeros(grid), _masked(forward(th)))


def plane_wave(grid: Grid, m1: int = 1, m2: int = 1, omega_amp: complex = 1.0,
               theta_amp: complex = 0.0, epsilon: float | None = None, **_) -> State:
    """Re(a exp(i k.x)) for omega and theta with k = (2 pi m1, pi m2 / L).

    A single plane wave has u.grad(omega) = u.grad(theta) = 0, so it evolves
    under the linear part only.
    """
    if (m1, m2) == (0, 0):
        raise ValueError("plane wave needs a nonzero wavevector")
    k1, k2 = 2 * np.pi * m1, np.pi * m2 / grid.L

    def wave(a):
        return Field.from_function(
            grid, lambda x1, x2: np.real(complex(a) * np.exp(1j * (k1 * x1 + k2 * x2))))

    w, th = _masked(forward(wave(omega_amp))), _masked(forward(wave(theta_amp)))
    if not np.any(w.coeffs) and not np.any(th.coeffs):
        raise ValueError(f"mode ({m1}, {m2}) lies outside the dealias mask")
    if epsilon is not None:
        return scale_to_epsilon(w, th, epsilon)
    return State(w, th)


def single_mode(grid: Grid, epsilon: float = 1e-2, m1: int = 1, m2: int = 20, **_) -> State:
    """Plane wave in both omega and theta, scaled to epsilon."""
    return plane_wave(grid, m1=m1, m2=m2, omega_amp=1.0, theta_amp=1.0j, epsilon=epsilon)


def random_state(grid: Grid, epsilon: float = 1e-2, seed: int = 0, **_) -> State:
    """Smooth random fields with Gaussian x2 envelope, scaled to epsilon."""
    n1max = int(grid.spec.dealias_fraction * grid.n1 / 2)
    n2max = int(grid.spec.dealias_fraction * grid.n2 / 2)
    band = (min(6, n1max), min(60, n2max))
    # an x2-derivative has zero mean without disturbing the decaying tails
    w = derivative(forward(random_field(grid, seed=2 * seed, band_limit=band)), 2)
    th = forward(random_field(grid, seed=2 * seed + 1, band_limit=band))
    return scale_to_epsilon(_masked(w), _masked(th), epsilon)


_BUILDERS = {
    "zero": zero,
    "gaussian_pair": gaussian_pair,
    "single_mode": single_mode,
    "heat_pulse": heat_pulse,
    "plane_wave": plane_wave,
    "random": random_state,
}


def build_initial(name: str, grid: Grid, **params) -> State:
    try:
        fn = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown initial condition {name!r}; choose from {IC_PRESETS}") from None
    return fn(grid, **params)
