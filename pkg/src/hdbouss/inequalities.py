"""
Sobolev and mixed anisotropic norms, and ratio checks for the anisotropic
inequalities used in the stability argument.

Every check reports ``lhs``, the right-hand side with its unnamed constant
stripped, and their ratio. Only the one-dimensional inequalities come with an
explicit constant (sqrt 2); for everything else the ratio is an empirical
estimate of the constant and nothing is asserted about it here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .decomposition import oscillation
from .grid import Field, Grid, Spectrum, derivative, forward, inverse, l2_norm_sq_spectral

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormSpec:
    kind: str
    s: float = 0.0
    inner_axis: int = 1
    inner_exponent: float = 2.0
    outer_exponent: float = 2.0

    def __post_init__(self):
        if self.kind == "sobolev":
            if not self.s >= 0:
                raise ValueError(f"Sobolev index must be nonnegative, got {self.s}")
        elif self.kind == "mixed":
            if self.inner_axis not in (1, 2):
                raise ValueError(f"inner_axis must be 1 or 2, got {self.inner_axis}")
            for p in (self.inner_exponent, self.outer_exponent):
                if p not in (2, math.inf):
                    raise ValueError(f"mixed-norm exponents must be 2 or inf, got {p}")
        else:
            raise ValueError(f"unknown norm kind {self.kind!r}")

    @classmethod
    def sobolev(cls, s: float) -> "NormSpec":
        return cls("sobolev", s=s)

    @classmethod
    def mixed(cls, inner_axis: int, inner_exponent: float, outer_exponent: float):
        return cls("mixed", inner_axis=inner_axis, inner_exponent=inner_exponent,
                   outer_exponent=outer_exponent)


def sobolev_norm(f: Field, s: float) -> float:
    """(sum (1 + |k|^2)^s |fhat|^2)^(1/2), scaled so s = 0 is the L2 norm."""
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    fh = forward(f).coeffs
    g = f.grid
    return math.sqrt(l2_norm_sq_spectral(fh * (1.0 + g.ksq) ** (s / 2.0), g))


def l2(f: Field) -> float:
    return float(np.sqrt(np.sum(f.values**2) * f.grid.cell))


def linf(f: Field) -> float:
    return float(np.abs(f.values).max())


def _lp_along(values: np.ndarray, axis: int, p: float, step: float) -> np.ndarray:
    if p == math.inf:
        return np.abs(values).max(axis=axis)
    return np.sqrt(np.sum(values**2, axis=axis) * step)


def mixed_norm(f: Field, spec: NormSpec) -> float:
    """Inner norm along ``spec.inner_axis`` for each line, then outer norm.

    ``NormSpec.mixed(1, inf, 2)`` is the L2_{x2} L^inf_{x1} norm.
    """
    if spec.kind == "sobolev":
        return sobolev_norm(f, spec.s)
    g = f.grid
    # values[j, i]: axis 0 is x2, axis 1 is x1
    if spec.inner_axis == 1:
        inner = _lp_along(f.values, 1, spec.inner_exponent, g.dx1)
        return float(_lp_along(inner, 0, spec.outer_exponent, g.dx2))
    inner = _lp_along(f.values, 0, spec.inner_exponent, g.dx2)
    return float(_lp_along(inner, 0, spec.outer_exponent, g.dx1))


def triple_product(f: Field, g: Field, h: Field) -> float:
    """Rectangle-rule integral of f*g*h over the domain."""
    for other in (g, h):
        if other.grid != f.grid:
            raise ValueError("grid mismatch in triple_product")
    return float(np.sum(f.values * g.values * h.values) * f.grid.cell)


def d(f: Field, axis: int, order: int = 1) -> Field:
    return inverse(derivative(forward(f), axis, order))


# ---------------------------------------------------------------- fields


def random_field(
    grid: Grid,
    seed: int,
    band_limit: int | tuple[int, int] = (6, 60),
    sigma: float | None = None,
    n_modulations: int = 2,
) -> Field:
    """Seeded smooth field with a Gaussian envelope exp(-x2^2 / sigma^2).

    Each x1 mode up to ``band_limit[0]`` gets a random phase and a random x2
    profile (envelope times a few cosines). The result is then truncated to
    |m1| <= band_limit[0], |m2| <= band_limit[1]. Modulation frequencies are
    capped so that the envelope's spectrum stays inside the x2 band.
    """
    L = grid.L
    if sigma is None:
        sigma = L / 6.0
    if not 0 < sigma <= L / 6.0 * (1 + 1e-12):
        raise ValueError(f"sigma must lie in (0, L/6] = (0, {L / 6.0}], got {sigma}")
    if isinstance(band_limit, int):
        k1max = k2max = band_limit
    else:
        k1max, k2max = band_limit
    if k1max < 0 or k2max < 0:
        raise ValueError("band limits must be nonnegative")

    rng = np.random.default_rng(seed)
    X1, X2 = grid.mesh
    x2 = grid.x2_nodes
    env = np.exp(-(x2**2) / sigma**2)
    # Gaussian spectrum exp(-k^2 sigma^2 / 4) falls below 1e-16 at k ~ 12.2/sigma
    qmax = max(0.0, math.pi * k2max / L - 12.2 / sigma)

    values = np.zeros(grid.shape)
    for m1 in range(k1max + 1):
        prof = rng.normal() * np.ones_like(x2)
        for _ in range(n_modulations):
            q = rng.uniform(0.0, qmax)
            prof += rng.normal() * np.cos(q * x2 + rng.uniform(0, 2 * np.pi))
        phase = 0.0 if m1 == 0 else rng.uniform(0, 2 * np.pi)
        values += (env * prof)[:, None] * np.cos(2 * np.pi * m1 * X1[0][None, :] + phase)

    s = forward(Field(grid, values)).coeffs
    keep = (grid.m1 <= k1max) & (np.abs(grid.m2) <= k2max)
    return inverse(Spectrum(grid, np.where(keep, s, 0.0)))


def ensemble_member(grid: Grid, seed: int, k2max: int = 60) -> Field:
    """Random field with randomized band limit and envelope width.

    The x1 band limit is drawn from 1..6, so the ensemble includes fields
    whose oscillation lives only on |m1| = 1.
    """
    rng = np.random.default_rng([seed, 7919])
    k1max = int(rng.integers(1, 7))
    sigma = grid.L / 6.0 * rng.uniform(0.5, 1.0)
    return random_field(grid, seed, (k1max, k2max), sigma)


# ---------------------------------------------------------------- inequalities


class Variant(str, enum.Enum):
    GG1 = "GG1"
    GG2 = "GG2"
    W2 = "W2"
    ANI = "ANI"
    TWO_GG = "TWO_GG"
    AN2 = "AN2"
    LINF_TILDE = "LINF_TILDE"
    POINCARE_L2 = "POINCARE_L2"
    POINCARE_LINF = "POINCARE_LINF"


ARITY = {
    Variant.GG1: 1, Variant.GG2: 1, Variant.W2: 1, Variant.ANI: 3,
    Variant.TWO_GG: 1, Variant.AN2: 3, Variant.LINF_TILDE: 1,
    Variant.POINCARE_L2: 1, Variant.POINCARE_LINF: 1,
}

# explicit constants; None where the inequality carries an unnamed C
EXPLICIT_CONSTANT = {Variant.GG1: SQRT2, Variant.GG2: SQRT2}


@dataclass(frozen=True)
class RatioReport:
    variant: Variant
    lhs: float
    rhs: float
    ratio: float | None
    seeds: tuple = ()
    constant: float | None = None

    @property
    def defined(self) -> bool:
        return self.ratio is not None


def _ratio(lhs: float, rhs: float) -> float | None:
    if rhs > 0:
        return lhs / rhs
    if lhs == 0:
        return None
    return math.inf


# 1D line quantities. ``lines`` has one line per row, uniform spacing ``h``,
# period ``length``.
def _line_derivative(lines: np.ndarray, length: float) -> np.ndarray:
    n = lines.shape[-1]
    k = 2 * np.pi / length * np.fft.rfftfreq(n, d=1.0 / n)
    c = sfft.rfft(lines, axis=-1) * (1j * k)
    if n % 2 == 0:
        c[..., -1] = 0.0
    return sfft.irfft(c, n=n, axis=-1)


def _line_l2(lines: np.ndarray, h: float) -> np.ndarray:
    return np.sqrt(np.sum(lines**2, axis=-1) * h)


def _line_report(variant, lines, h, length, seeds):
    lines = np.atleast_2d(np.asarray(lines, dtype=float))
    if variant is Variant.W2:
        lines = lines - lines.mean(axis=-1, keepdims=True)
    lhs = np.abs(lines).max(axis=-1)
    a = _line_l2(lines, h)
    b = _line_l2(_line_derivative(lines, length), h)
    rhs = np.sqrt(a * b)
    if variant is Variant.GG2:
        # sqrt2 * |f|^(1/2) |f'|^(1/2) + |f|: report lhs / (|f|^(1/2)|f'|^(1/2) + |f|)
        rhs = rhs + a
    # lines at round-off level (far tails) carry no information
    live = a > 1e-10 * a.max() if a.max() > 0 else np.zeros_like(a, dtype=bool)
    ratios = np.array([(_ratio(l, r) or 0.0) if ok else 0.0
                       for l, r, ok in zip(lhs, rhs, live)])
    i = int(np.argmax(ratios))
    return RatioReport(variant, float(lhs[i]), float(rhs[i]), _ratio(lhs[i], rhs[i]),
                       seeds, EXPLICIT_CONSTANT.get(variant))


def inequality_ratio(variant, *fields, seeds: tuple = ()) -> RatioReport:
    """Evaluate one inequality on the given fields.

    One-dimensional variants: GG1 acts on x2-lines (the decaying envelope
    stands in for the whole line) and accepts a Field or a Profile; GG2 and W2
    act on x1-lines of the periodic box and accept a Field or raw samples of
    one period. A Field is reduced to its worst line.
    Tilde variants apply ``oscillation`` to their first argument.
    """
    variant = Variant(variant)
    if len(fields) != ARITY[variant]:
        raise ValueError(f"{variant.value} takes {ARITY[variant]} field(s), got {len(fields)}")
    f = fields[0]

    if variant is Variant.GG1:
        g = f.grid
        lines = f.values if np.ndim(f.values) == 1 else f.values.T
        return _line_report(variant, lines, g.dx2, 2 * g.L, seeds)
    if variant in (Variant.GG2, Variant.W2):
        if isinstance(f, Field):
            return _line_report(variant, f.values, f.grid.dx1, 1.0, seeds)
        arr = np.asarray(f, dtype=float)
        return _line_report(variant, arr, 1.0 / arr.shape[-1], 1.0, seeds)

    if variant is Variant.ANI:
        f, g, h = fields
        lhs = abs(triple_product(f, g, h))
        nf = l2(f)
        rhs = math.sqrt(nf * (nf + l2(d(f, 1)))) * math.sqrt(l2(g) * l2(d(g, 2))) * l2(h)
    elif variant is Variant.AN2:
        f, g, h = fields
        ft = oscillation(f)
        lhs = abs(triple_product(ft, g, h))
        rhs = math.sqrt(l2(ft) * l2(d(ft, 1))) * math.sqrt(l2(g) * l2(d(g, 2))) * l2(h)
    elif variant is Variant.TWO_GG:
        lhs = linf(f)
        n0, n1_ = l2(f), l2(d(f, 1))
        f2 = d(f, 2)
        n2_, n12 = l2(f2), l2(d(f2, 1))
        rhs = (n0 * (n0 + n1_) * n2_ * (n2_ + n12)) ** 0.25
    elif variant is Variant.LINF_TILDE:
        ft = oscillation(f)
        lhs = linf(ft)
        f2 = d(ft, 2)
        rhs = (l2(ft) * l2(d(ft, 1)) * l2(f2) * l2(d(f2, 1))) ** 0.25
    elif variant is Variant.POINCARE_L2:
        ft = oscillation(f)
        lhs = l2(ft)
        rhs = l2(d(ft, 1))
    elif variant is Variant.POINCARE_LINF:
        ft = oscillation(f)
        lhs = linf(ft)
        rhs = sobolev_norm(d(ft, 1), 1.0)
    else:  # pragma: no cover
        raise ValueError(variant)
    return RatioReport(variant, float(lhs), float(rhs), _ratio(lhs, rhs), seeds)


def bridge_gap(f: Field) -> float:
    """(1 + 1/(2 pi)) |d1 ft| - (|ft| + |d1 ft|) for ft = oscillation(f).

    Nonnegative by the sharp Poincare constant; links the lower-order factor
    of ANI to the pure derivative factor of AN2.
    """
    ft = oscillation(f)
    a, b = l2(ft), l2(d(ft, 1))
    return (1 + 1 / (2 * math.pi)) * b - (a + b)


def ensemble_fields(variant, grid: Grid, seed: int) -> tuple[Field, ...]:
    """Fields for one ensemble sample of ``variant``; seeds are derived from ``seed``."""
    n = ARITY[Variant(variant)]
    return tuple(ensemble_member(grid, 3 * seed + j) for j in range(n))


def ensemble_stats(variant, grid: Grid, seeds) -> dict:
    """Order-independent summary of ratios over an ensemble of seeds."""
    variant = Variant(variant)
    ratios, used = [], []
    for s in seeds:
        r = inequality_ratio(variant, *ensemble_fields(variant, grid, s), seeds=(s,))
        if r.ratio is not None:
            ratios.append(r.ratio)
            used.append(s)
    if not ratios:
        return {"count": 0, "max_ratio": None, "argmax_seed": None, "median_ratio": None}
    arr = np.array(ratios)
    i = int(np.argmax(arr))
    return {
        "count": len(arr),
        "max_ratio": float(arr[i]),
        "argmax_seed": int(used[i]),
        "median_ratio": float(np.median(arr)),
    }
