"""Independent reference computations used by the tests.

Nothing here calls the spectral solver: the linear oracle is built from the
2x2 matrix and cross-checked against a finite-difference discretization
integrated with a general-purpose ODE solver.
"""

import math

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.sparse.linalg import splu

# frozen analytic values
HEAT_RATE_K1_2PI = 4 * math.pi**2          # kappa * k1^2 with kappa = 1, k1 = 2 pi
POINCARE_L2_SHARP = 1 / (2 * math.pi)      # |f~| <= |d1 f~| / (2 pi)
GG1_GAUSSIAN = (math.pi / 2) ** -0.25      # sup e^{-x^2} / sqrt(|f| |f'|)


def linear_matrix(nu, kappa, k1, k2):
    """d/dt (omega_hat, theta_hat) for one Fourier mode with advection dropped."""
    ksq = k1**2 + k2**2
    return np.array([[-nu * k1**2, 1j * k1], [1j * k1 / ksq, -kappa * k1**2]])


def linear_eigenvalues(nu, kappa, k1, k2):
    """Roots of l^2 + (nu + kappa) k1^2 l + nu kappa k1^4 + k1^2/|k|^2 = 0."""
    ksq = k1**2 + k2**2
    b = (nu + kappa) * k1**2
    c = nu * kappa * k1**4 + k1**2 / ksq
    disc = np.sqrt(complex(b * b - 4 * c))
    return np.array([(-b + disc) / 2, (-b - disc) / 2])


def _fd_ops(n, h):
    e = np.ones(n)
    d1 = sp.diags([-e[:-1], e[:-1]], [-1, 1], shape=(n, n), format="lil")
    d1[0, n - 1], d1[n - 1, 0] = -1, 1
    d2 = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], shape=(n, n), format="lil")
    d2[0, n - 1] = d2[n - 1, 0] = 1
    return d1.tocsr() / (2 * h), d2.tocsr() / h**2


def fd_linear_evolution(nu, kappa, m1, m2_per_unit, omega0, theta0, T, n=64):
    """Brute-force linear evolution of a plane wave on one periodic cell.

    The cell is [0, 1) x [0, 1/m2_per_unit) with n x n points, second-order
    differences in space and solve_ivp in time. Returns the complex amplitudes
    (omega, theta) of the exp(i k.x) mode at time T.
    """
    Lx, Ly = 1.0, 1.0 / m2_per_unit
    hx, hy = Lx / n, Ly / n
    x = np.arange(n) * hx
    y = np.arange(n) * hy
    X, Y = np.meshgrid(x, y, indexing="ij")
    k1, k2 = 2 * np.pi * m1, 2 * np.pi * m2_per_unit
    phase = np.exp(1j * (k1 * X + k2 * Y))

    D1x, D2x = _fd_ops(n, hx)
    D1y, D2y = _fd_ops(n, hy)
    I = sp.identity(n, format="csr")
    dx = sp.kron(D1x, I, format="csr")
    dy = sp.kron(I, D1y, format="csr")
    dxx = sp.kron(D2x, I, format="csr")
    lap = dxx + sp.kron(I, D2y, format="csr")
    # pin the mean to make the periodic Laplacian invertible
    lap_pinned = lap.tolil()
    lap_pinned[0, :] = 1.0
    lu = splu(lap_pinned.tocsc())

    N = n * n

    def rhs(_, y_):
        w, th = y_[:N], y_[N:]
        b = w.copy()
        b[0] = 0.0
        psi = lu.solve(b)
        u2 = dx @ psi
        dw = nu * (dxx @ w) + dx @ th
        dth = kappa * (dxx @ th) - u2
        return np.concatenate([dw, dth])

    w0 = np.real(omega0 * phase).ravel()
    t0 = np.real(theta0 * phase).ravel()
    sol = solve_ivp(rhs, (0.0, T), np.concatenate([w0, t0]), method="DOP853",
                    rtol=1e-10, atol=1e-13)
    yT = sol.y[:, -1]
    proj = np.conj(phase).ravel() / (N / 2)
    return complex(proj @ yT[:N]), complex(proj @ yT[N:])


def exact_linear_evolution(nu, kappa, k1, k2, omega0, theta0, T):
    return expm(linear_matrix(nu, kappa, k1, k2) * T) @ np.array([omega0, theta0])
