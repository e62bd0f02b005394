"""Prognostic state (vorticity, temperature perturbation) and derived norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, Spectrum, forward, inverse, solve_streamfunction


@dataclass(frozen=True)
class PhysParams:
    nu: float = 1.0
    kappa: float = 1.0
    buoyancy_coupling: bool = True

    def __post_init__(self):
        for name in ("nu", "kappa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class State:
    omega_hat: Spectrum
    theta_hat: Spectrum
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.omega_hat.grid

    @classmethod
    def from_fields(cls, omega: Field, theta: Field, t: float = 0.0, truncate=True):
        """Build a state from physical fields, by default truncated to the dealias mask."""
        w, th = forward(omega), forward(theta)
        if truncate:
            mask = omega.grid.dealias_mask
            w = Spectrum(w.grid, np.where(mask, w.coeffs, 0.0))
            th = Spectrum(th.grid, np.where(mask, th.coeffs, 0.0))
        return cls(w, th, t)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "State":
        return cls(Spectrum.zeros(grid), Spectrum.zeros(grid), t)

    def fields(self) -> tuple[Field, Field]:
        return inverse(self.omega_hat), inverse(self.theta_hat)


def velocity_from_vorticity(state: State | Spectrum) -> tuple[Spectrum, Spectrum]:
    """u = (-d2 psi, d1 psi) with Laplacian(psi) = omega."""
    w = state.omega_hat if isinstance(state, State) else state
    g = w.grid
    psi = solve_streamfunction(w).coeffs
    return Spectrum(g, -1j * g.k2 * psi), Spectrum(g, 1j * g.k1 * psi)


def vorticity_from_velocity(u1: Spectrum, u2: Spectrum) -> Spectrum:
    g = u1.grid
    return Spectrum(g, 1j * g.k1 * u2.coeffs - 1j * g.k2 * u1.coeffs)


class NormWeights:
    """Precomputed Parseval weights so norms are single weighted sums.

    Velocity norms are expressed through |omega_hat|^2 / |k|^2 = |u_hat|^2.
    """

    def __init__(self, grid: Grid):
        g = grid
        base = g.area * g.weights
        osc = (g.m1 != 0) * np.ones(g.spectral_shape)
        s1 = 1.0 + g.ksq
        self.l2_theta = base
        self.l2_u = base * g.inv_ksq
        self.h1_theta = base * s1
        self.h1_u = self.l2_u * s1
        self.h2_theta = base * s1**2
        self.h2_u = self.l2_u * s1**2
        self.h1_theta_osc = self.h1_theta * osc
        self.h1_u_osc = self.h1_u * osc
        self.l2_theta_osc = base * osc
        k1sq = g.k1**2
        # d1 multipliers for the horizontal dissipation integrands
        self.d1_l2_theta = base * k1sq
        self.d1_l2_u = self.l2_u * k1sq
        self.d1_h2_theta = self.h2_theta * k1sq
        self.d1_h2_u = self.h2_u * k1sq


def _sq(a: np.ndarray) -> np.ndarray:
    return a.real**2 + a.imag**2


def state_norms(state: State, weights: NormWeights | None = None) -> dict:
    """L2 / H1 / H2 norms of u and theta, the oscillation H1 norm and osc fraction."""
    nw = weights or NormWeights(state.grid)
    aw, at = _sq(state.omega_hat.coeffs), _sq(state.theta_hat.coeffs)

    def s(wgt, a):
        return float(np.sum(wgt * a))

    l2_theta_sq = s(nw.l2_theta, at)
    l2_theta_osc_sq = s(nw.l2_theta_osc, at)
    out = {
        "l2_u": math.sqrt(s(nw.l2_u, aw)),
        "l2_theta": math.sqrt(l2_theta_sq),
        "h1_u": math.sqrt(s(nw.h1_u, aw)),
        "h1_theta": math.sqrt(s(nw.h1_theta, at)),
        "h2_u": math.sqrt(s(nw.h2_u, aw)),
        "h2_theta": math.sqrt(s(nw.h2_theta, at)),
        "h1_osc": math.sqrt(s(nw.h1_u_osc, aw)) + math.sqrt(s(nw.h1_theta_osc, at)),
        # theta = 0 has nothing oscillating: report 0 so zero data stays all-zero
        "osc_fraction": (math.sqrt(l2_theta_osc_sq / l2_theta_sq)
                         if l2_theta_sq > 0 else 0.0),
    }
    return out
