"""
Spectral grid on the strip T x [-L, L].

x1 runs over the unit periodic box [0, 1); the vertical line R is replaced by
the periodic interval [-L, L). Initial data are built with Gaussian-or-faster
decay in x2 so that the wrap-around is invisible at double precision; the
solver monitors the tail to keep that honest.

Storage conventions
-------------------
* ``Field.values`` has shape ``(n2, n1)``: row j is the x2 node, column i the
  x1 node (row-major, x2 outer).
* ``Spectrum.coeffs`` holds the half spectrum in x1, shape ``(n2, n1//2 + 1)``.
  Column ``m1`` (0..n1/2) and row index in FFT order for ``m2``. Negative m1
  are implied by Hermitian symmetry. The forward transform divides by
  ``n1*n2`` so ``coeffs[0, 0]`` is the domain mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class GridSpec:
    n1: int
    n2: int
    half_width: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if not (0 < self.dealias_fraction <= 1):
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )


class Grid:
    """Nodes, wavenumber tables and masks for one :class:`GridSpec`.

    Treated as immutable once built; all arrays are flagged read-only.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        n1, n2, L = spec.n1, spec.n2, spec.half_width
        self.n1, self.n2, self.L = n1, n2, L
        self.dx1 = 1.0 / n1
        self.dx2 = 2.0 * L / n2
        self.area = 2.0 * L
        self.cell = self.dx1 * self.dx2

        self.x1_nodes = np.arange(n1) * self.dx1
        self.x2_nodes = -L + np.arange(n2) * self.dx2

        # ascending tables, m in [-n/2, n/2)
        self.m1_table = np.arange(-n1 // 2, n1 // 2)
        self.m2_table = np.arange(-n2 // 2, n2 // 2)
        self.k1_table = 2.0 * np.pi * self.m1_table
        self.k2_table = (np.pi / L) * self.m2_table

        # half-spectrum layout used by Spectrum.coeffs
        m1 = np.arange(n1 // 2 + 1)
        m2 = np.fft.fftfreq(n2, d=1.0 / n2).astype(int)
        self.m1 = m1[None, :]
        self.m2 = m2[:, None]
        self.k1 = 2.0 * np.pi * self.m1 * np.ones((n2, 1))
        self.k2 = (np.pi / L) * self.m2 * np.ones((1, n1 // 2 + 1))
        self.ksq = self.k1**2 + self.k2**2

        frac = spec.dealias_fraction
        self.dealias_mask = (np.abs(self.m1) <= frac * n1 / 2) & (
            np.abs(self.m2) <= frac * n2 / 2
        )

        # Parseval weights for the half spectrum: interior m1 columns count twice
        w = np.full(n1 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.weights = np.broadcast_to(w[None, :], (n2, n1 // 2 + 1)).copy()

        self.inv_ksq = np.zeros_like(self.ksq)
        nz = self.ksq > 0
        self.inv_ksq[nz] = 1.0 / self.ksq[nz]

        for arr in (
            self.x1_nodes, self.x2_nodes, self.k1_table, self.k2_table,
            self.k1, self.k2, self.ksq, self.dealias_mask, self.weights,
            self.inv_ksq,
        ):
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n2, self.n1)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.n2, self.n1 // 2 + 1)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X1, X2) arrays of shape (n2, n1)."""
        X1, X2 = np.meshgrid(self.x1_nodes, self.x2_nodes, indexing="xy")
        return X1, X2

    def k_axis(self, axis: int) -> np.ndarray:
        if axis == 1:
            return self.k1
        if axis == 2:
            return self.k2
        raise ValueError(f"axis must be 1 or 2, got {axis}")

    def __eq__(self, other):
        return isinstance(other, Grid) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        s = self.spec
        return f"Grid(n1={s.n1}, n2={s.n2}, L={s.half_width})"


def make_grid(spec: GridSpec | None = None, **kwargs) -> Grid:
    """Build a grid; accepts a GridSpec or its fields as keywords."""
    if spec is None:
        spec = GridSpec(**kwargs)
    return Grid(spec)


def _check_same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise ValueError(f"grid mismatch: {g!r} vs {o.grid!r}")
    return g


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a scalar function on the grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, Field):
            _check_same_grid(self, c)
            return Field(self.grid, self.values * c.values)
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        X1, X2 = grid.mesh
        return cls(grid, np.broadcast_to(fn(X1, X2), grid.shape).astype(float))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Half-spectrum coefficients of a real field (see module docstring)."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.spectral_shape:
            raise ValueError(
                f"expected shape {self.grid.spectral_shape}, got {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def coeff(self, m1: int, m2: int) -> complex:
        """Coefficient of exp(2*pi*i*m1*x1 + i*pi*m2*(x2+L)/L)."""
        g = self.grid
        if m1 < 0:
            return np.conj(self.coeff(-m1, -m2))
        if m1 > g.n1 // 2:
            raise IndexError(m1)
        return complex(self.coeffs[m2 % g.n2, m1])

    def full(self) -> np.ndarray:
        """Full (n2, n1) coefficient array in FFT order."""
        return sfft.fft2(inverse(self).values, norm="forward")

    def hermitian_defect(self) -> float:
        """Relative violation of Hermitian symmetry in the self-conjugate columns."""
        c = self.coeffs
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        idx = (-np.arange(self.grid.n2)) % self.grid.n2
        worst = 0.0
        for col in (0, self.grid.n1 // 2):
            worst = max(worst, np.abs(c[:, col] - np.conj(c[idx, col])).max())
        return worst / scale

    def __add__(self, other):
        _check_same_grid(self, other)
        return Spectrum(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return Spectrum(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return Spectrum(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Spectrum(self.grid, -self.coeffs)

    @classmethod
    def zeros(cls, grid: Grid) -> "Spectrum":
        return cls(grid, np.zeros(grid.spectral_shape, dtype=complex))


def forward(f: Field) -> Spectrum:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("non-finite values in field")
    return Spectrum(f.grid, sfft.rfft2(f.values, norm="forward"))


def inverse(s: Spectrum) -> Field:
    if not np.all(np.isfinite(s.coeffs)):
        raise ValueError("non-finite coefficients in spectrum")
    g = s.grid
    return Field(g, sfft.irfft2(s.coeffs, s=g.shape, norm="forward"))


def transform(x: Field | Spectrum, direction: str = "forward"):
    if direction == "forward":
        if not isinstance(x, Field):
            raise TypeError("forward transform expects a Field")
        return forward(x)
    if direction == "inverse":
        if not isinstance(x, Spectrum):
            raise TypeError("inverse transform expects a Spectrum")
        return inverse(x)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def derivative(s: Spectrum, axis: int, order: int = 1) -> Spectrum:
    """Multiply by (i k_axis)**order.

    For odd orders the Nyquist modes of the differentiated axis are zeroed,
    otherwise the result would not be the spectrum of a real field.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    g = s.grid
    out = s.coeffs * (1j * g.k_axis(axis)) ** order
    if order % 2:
        if axis == 1:
            out[:, -1] = 0.0
        else:
            out[g.n2 // 2, :] = 0.0
    return Spectrum(g, out)


def dealias(s: Spectrum) -> Spectrum:
    return Spectrum(s.grid, np.where(s.grid.dealias_mask, s.coeffs, 0.0))


def solve_streamfunction(omega_hat: Spectrum) -> Spectrum:
    """psi with Laplacian(psi) = omega; the (0, 0) mode is fixed to zero."""
    g = omega_hat.grid
    return Spectrum(g, -omega_hat.coeffs * g.inv_ksq)


def l2_inner_spectral(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """Integral of a*b over the domain from half-spectrum coefficient arrays."""
    return float(grid.area * np.sum(grid.weights * (np.conj(a) * b).real))


def l2_norm_sq_spectral(a: np.ndarray, grid: Grid) -> float:
    return float(grid.area * np.sum(grid.weights * (a.real**2 + a.imag**2)))
