"""Horizontal average / oscillation split f = fbar + ftilde.

The average over the periodic x1 box is the m1 = 0 column of the spectrum, so
both parts are obtained by coefficient slicing rather than quadrature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, Spectrum, derivative, forward, inverse


@dataclass(frozen=True, eq=False)
class Profile:
    """A function of x2 alone, sampled on the x2 nodes."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n2,):
            raise ValueError(f"expected length {self.grid.n2}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite profile values")
        object.__setattr__(self, "values", v)

    def broadcast(self) -> Field:
        return Field(self.grid, np.repeat(self.values[:, None], self.grid.n1, axis=1))

    def l2_norm(self) -> float:
        """L2 norm of the x1-independent extension over the domain."""
        return float(np.sqrt(np.sum(self.values**2) * self.grid.dx2))

    def to_csv(self, path, header: str = "value") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x2", header])
            for x, v in zip(self.grid.x2_nodes, self.values):
                w.writerow([repr(float(x)), repr(float(v))])


def _as_spectrum(f: Field | Spectrum) -> Spectrum:
    return f if isinstance(f, Spectrum) else forward(f)


def average_spectrum(s: Spectrum) -> Spectrum:
    out = np.zeros_like(s.coeffs)
    out[:, 0] = s.coeffs[:, 0]
    return Spectrum(s.grid, out)


def oscillation_spectrum(s: Spectrum) -> Spectrum:
    out = s.coeffs.copy()
    out[:, 0] = 0.0
    return Spectrum(s.grid, out)


def horizontal_average(f: Field | Spectrum) -> Profile:
    s = _as_spectrum(f)
    g = s.grid
    # m1 = 0 column back to x2 space
    vals = sfft.ifft(s.coeffs[:, 0], norm="forward").real
    return Profile(g, vals)


def horizontal_average_quadrature(f: Field) -> Profile:
    """Rectangle-rule mean over x1; the independent route for cross-checks."""
    return Profile(f.grid, f.values.mean(axis=1))


def oscillation(f: Field | Spectrum) -> Field:
    return inverse(oscillation_spectrum(_as_spectrum(f)))


def split(f: Field | Spectrum) -> tuple[Field, Field]:
    """(fbar broadcast over x1, ftilde)."""
    s = _as_spectrum(f)
    return inverse(average_spectrum(s)), inverse(oscillation_spectrum(s))


def l2_inner(f: Field, g: Field) -> float:
    return float(np.sum(f.values * g.values) * f.grid.cell)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(f.values**2) * f.grid.cell))


def decomposition_report(u1: Field, u2: Field, theta: Field, tol: float = 1e-8) -> dict:
    """Residuals of the divergence, average and orthogonality properties.

    ``u1``, ``u2`` are the velocity components; they should be divergence-free
    to about 1e-10. Values above ``tol`` are flagged rather than rejected.
    """
    s1, s2, st = forward(u1), forward(u2), forward(theta)

    def div(a, b):
        d = derivative(a, 1).coeffs + derivative(b, 2).coeffs
        return float(np.abs(inverse(Spectrum(a.grid, d)).values).max())

    div_bar = div(average_spectrum(s1), average_spectrum(s2))
    div_tilde = div(oscillation_spectrum(s1), oscillation_spectrum(s2))
    ubar2_max = float(np.abs(horizontal_average(s2).values).max())

    tbar, ttil = split(st)
    inner = l2_inner(tbar, ttil)
    nrm = l2_norm(theta) ** 2
    pyth = abs(nrm - l2_norm(tbar) ** 2 - l2_norm(ttil) ** 2)
    pyth_rel = pyth / nrm if nrm > 0 else 0.0
    inner_rel = abs(inner) / nrm if nrm > 0 else 0.0

    report = {
        "div_bar_max": div_bar,
        "div_tilde_max": div_tilde,
        "ubar2_max": ubar2_max,
        "bar_tilde_inner": inner,
        "bar_tilde_inner_rel": inner_rel,
        "pythagoras_residual": pyth,
        "pythagoras_residual_rel": pyth_rel,
    }
    report["flags"] = [
        k
        for k in ("div_bar_max", "div_tilde_max", "ubar2_max", "bar_tilde_inner_rel",
                  "pythagoras_residual_rel")
        if report[k] > tol
    ]
    return report
