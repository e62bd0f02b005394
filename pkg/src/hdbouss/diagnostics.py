"""Energy functional, budget splits, averaged-system residuals and decay fits.

All triple-product integrals are evaluated by grid quadrature. For fields
inside the dealias mask the integrand is a trigonometric polynomial whose
frequencies stay below the grid Nyquist limit, so the quadrature is exact and
the individual terms add up to their spectral totals to round-off.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .decomposition import (
    Profile,
    average_spectrum,
    horizontal_average,
    oscillation_spectrum,
)
from .grid import Field, Grid, Spectrum, dealias, derivative, forward, inverse, l2_inner_spectral
from .state import NormWeights, PhysParams, State, _sq, state_norms, velocity_from_vorticity

TAIL_WARN = 1e-8
RESOLUTION_WARN = 1e-8

CSV_COLUMNS = (
    "t", "E", "l2_u", "l2_theta", "h1_osc", "h2_u", "h2_theta",
    "diss_u_cum", "diss_theta_cum", "bar_u2_max", "tail_mass", "cfl",
    # extras
    "l2_diss_u_cum", "l2_diss_theta_cum", "osc_fraction", "div_max",
    "h1_u", "h1_theta",
)


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    l2_u: float
    l2_theta: float
    h1_osc: float
    h2_u: float
    h2_theta: float
    diss_u_cum: float
    diss_theta_cum: float
    bar_u2_max: float
    tail_mass: float
    cfl: float
    l2_diss_u_cum: float = 0.0
    l2_diss_theta_cum: float = 0.0
    osc_fraction: float = 0.0
    div_max: float = 0.0
    h1_u: float = 0.0
    h1_theta: float = 0.0
    flags: tuple = field(default=())

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)


def tail_mass(state: State, band: float = 0.9) -> float:
    """max |f| over |x2| > band*L relative to max |f|, worst of omega and theta."""
    g = state.grid
    outer = np.abs(g.x2_nodes) > band * g.L
    worst = 0.0
    for s in (state.omega_hat, state.theta_hat):
        v = np.abs(inverse(s).values)
        top = v.max()
        if top > 0:
            worst = max(worst, float(v[outer].max() / top))
    return worst


def make_record(state: State, params: PhysParams, *, cum=(0.0, 0.0, 0.0, 0.0),
                h2_sup: float | None = None, div_max: float = 0.0,
                ubar2_max: float = 0.0, cfl: float = 0.0,
                weights: NormWeights | None = None) -> DiagnosticsRecord:
    """Diagnostics for one state.

    ``cum`` holds the time-integrated dissipation
    [nu|d1 u|^2, kappa|d1 theta|^2 in L2, the same two in H2] and ``h2_sup``
    the running sup of ||u||_H2^2 + ||theta||_H2^2.
    """
    n = state_norms(state, weights)
    h2_now = n["h2_u"] ** 2 + n["h2_theta"] ** 2
    sup = h2_now if h2_sup is None else max(h2_sup, h2_now)
    tm = tail_mass(state)
    flags = []
    if tm > TAIL_WARN:
        flags.append("tail")
    return DiagnosticsRecord(
        t=float(state.t),
        E=sup + cum[2] + cum[3],
        l2_u=n["l2_u"], l2_theta=n["l2_theta"], h1_osc=n["h1_osc"],
        h2_u=n["h2_u"], h2_theta=n["h2_theta"],
        diss_u_cum=float(cum[2]), diss_theta_cum=float(cum[3]),
        bar_u2_max=ubar2_max, tail_mass=tm, cfl=cfl,
        l2_diss_u_cum=float(cum[0]), l2_diss_theta_cum=float(cum[1]),
        osc_fraction=n["osc_fraction"], div_max=div_max,
        h1_u=n["h1_u"], h1_theta=n["h1_theta"], flags=tuple(flags),
    )


def energy_functional(records: Sequence[DiagnosticsRecord]) -> tuple[np.ndarray, float]:
    """(E(t) at the record times, sup_t E(t) / E(0))."""
    E = np.array([r.E for r in records])
    if len(E) == 0:
        raise ValueError("no records")
    ratio = float(E.max() / E[0]) if E[0] > 0 else float("nan")
    return E, ratio


# -- triple products and their bar/tilde splits -------------------------------


def _phys(s: Spectrum) -> np.ndarray:
    return inverse(s).values


def _integral(*arrays, grid: Grid) -> float:
    prod = arrays[0]
    for a in arrays[1:]:
        prod = prod * a
    return float(np.sum(prod) * grid.cell)


class BarTildeSplit(NamedTuple):
    """coef * integral of f g h with g oscillatory, split by the parts of f and h."""

    bar_bar: float       # fbar g~ hbar, vanishes identically
    bar_tilde: float     # fbar g~ h~
    tilde_bar: float     # f~ g~ hbar
    tilde_tilde: float   # f~ g~ h~

    @property
    def total(self) -> float:
        return self.bar_bar + self.bar_tilde + self.tilde_bar + self.tilde_tilde


def bar_tilde_split(f: Spectrum, g: Spectrum, h: Spectrum, coef: float = 1.0) -> BarTildeSplit:
    """Split coef * int f g h; ``g`` is the factor carrying the d1 derivative."""
    grid = f.grid
    fb, ft = _phys(average_spectrum(f)), _phys(oscillation_spectrum(f))
    hb, ht = _phys(average_spectrum(h)), _phys(oscillation_spectrum(h))
    gt = _phys(oscillation_spectrum(g))
    return BarTildeSplit(
        coef * _integral(fb, gt, hb, grid=grid),
        coef * _integral(fb, gt, ht, grid=grid),
        coef * _integral(ft, gt, hb, grid=grid),
        coef * _integral(ft, gt, ht, grid=grid),
    )


def _d(s: Spectrum, *axes: int) -> Spectrum:
    for a in axes:
        s = derivative(s, a)
    return s


def _nsq(s: Spectrum) -> float:
    return l2_inner_spectral(s.coeffs, s.coeffs, s.grid)


def _lap(s: Spectrum) -> Spectrum:
    return Spectrum(s.grid, -s.grid.ksq * s.coeffs)


def _advect_hat(u1: np.ndarray, u2: np.ndarray, s: Spectrum) -> Spectrum:
    """Dealiased spectrum of u.grad(f)."""
    p = u1 * _phys(_d(s, 1)) + u2 * _phys(_d(s, 2))
    return dealias(forward(Field(s.grid, p)))


def h1_budget(state: State, params: PhysParams | None = None) -> dict:
    """Terms of 1/2 d/dt(|omega|^2 + |grad theta|^2) + dissipation = M.

    M = -int grad(u.grad theta).grad theta is split into
    M1..M4 (see :func:`bar_tilde_split` for the M3 split).
    """
    params = params or PhysParams()
    g = state.grid
    w, th = state.omega_hat, state.theta_hat
    u1h, u2h = velocity_from_vorticity(w)
    d1u1, d2u1 = _phys(_d(u1h, 1)), _phys(_d(u1h, 2))
    d1u2, d2u2 = _phys(_d(u2h, 1)), _phys(_d(u2h, 2))
    t1, t2 = _phys(_d(th, 1)), _phys(_d(th, 2))
    M1 = -_integral(d1u1, t1, t1, grid=g)
    M2 = -_integral(d1u2, t2, t1, grid=g)
    M3 = -_integral(d2u1, t1, t2, grid=g)
    M4 = -_integral(d2u2, t2, t2, grid=g)
    M = M1 + M2 + M3 + M4

    adv = _advect_hat(_phys(u1h), _phys(u2h), th)
    M_spec = l2_inner_spectral(adv.coeffs, _lap(th).coeffs, g)

    diss_w = params.nu * _nsq(_d(w, 1))
    diss_t = params.kappa * sum(
        _nsq(_d(th, 1, a)) for a in (1, 2))
    energy = 0.5 * (l2_inner_spectral(w.coeffs, w.coeffs, g)
                    + sum(_nsq(_d(th, a)) for a in (1, 2)))
    return {
        "t": state.t, "energy": energy,
        "M": M, "M1": M1, "M2": M2, "M3": M3, "M4": M4, "M_spectral": M_spec,
        "M3_split": bar_tilde_split(_d(u1h, 2), _d(th, 1), _d(th, 2), -1.0),
        "diss_omega": diss_w, "diss_theta": diss_t,
        "lhs_rate": M - diss_w - diss_t,
    }


def _spectral_tail(state: State, band: float = 0.8) -> float:
    """H2 energy in the outer shell of the dealias mask, relative to the total."""
    g = state.grid
    nw = NormWeights(g)
    frac = g.spec.dealias_fraction
    shell = (np.abs(g.m1) > band * frac * g.n1 / 2) | (np.abs(g.m2) > band * frac * g.n2 / 2)
    a = nw.h2_u * _sq(state.omega_hat.coeffs) + nw.h2_theta * _sq(state.theta_hat.coeffs)
    tot = a.sum()
    return float(a[shell].sum() / tot) if tot > 0 else 0.0


def h2_budget(state: State, params: PhysParams | None = None) -> dict:
    """Terms of 1/2 d/dt(|grad omega|^2 + |Lap theta|^2) + dissipation = N + P."""
    params = params or PhysParams()
    g = state.grid
    w, th = state.omega_hat, state.theta_hat
    u1h, u2h = velocity_from_vorticity(w)
    d1u1, d2u1 = _phys(_d(u1h, 1)), _phys(_d(u1h, 2))
    d1u2, d2u2 = _phys(_d(u2h, 1)), _phys(_d(u2h, 2))
    w1, w2 = _phys(_d(w, 1)), _phys(_d(w, 2))
    N1 = -_integral(d1u1, w1, w1, grid=g)
    N2 = -_integral(d1u2, w1, w2, grid=g)
    N3 = -_integral(d2u1, w1, w2, grid=g)
    N4 = -_integral(d2u2, w2, w2, grid=g)
    N = N1 + N2 + N3 + N4

    lap_th = _lap(th)
    lt = _phys(lap_th)
    t1, t2 = _phys(_d(th, 1)), _phys(_d(th, 2))
    t11, t12, t22 = _phys(_d(th, 1, 1)), _phys(_d(th, 1, 2)), _phys(_d(th, 2, 2))
    lap_u1 = _lap(u1h)
    P1 = -_integral(_phys(lap_u1), t1, lt, grid=g)
    P2 = -_integral(w1, t2, lt, grid=g)  # Lap u2 = d1 omega
    P3 = -2 * _integral(d1u1, t11, lt, grid=g)
    P4 = -2 * _integral(d1u2, t12, lt, grid=g)
    P5 = -2 * _integral(d2u1, t12, lt, grid=g)
    P6 = -2 * _integral(d2u2, t22, lt, grid=g)
    P = P1 + P2 + P3 + P4 + P5 + P6

    u1, u2 = _phys(u1h), _phys(u2h)
    N_spec = l2_inner_spectral(_lap(w).coeffs, _advect_hat(u1, u2, w).coeffs, g)
    P_spec = -l2_inner_spectral(_lap(_advect_hat(u1, u2, th)).coeffs, lap_th.coeffs, g)

    diss_w = params.nu * (_nsq(_d(w, 1, 1)) + _nsq(_d(w, 1, 2)))
    diss_t = params.kappa * _nsq(_d(lap_th, 1))
    energy = 0.5 * (_nsq(_d(w, 1)) + _nsq(_d(w, 2)) + _nsq(lap_th))
    tail = _spectral_tail(state)
    return {
        "t": state.t, "energy": energy,
        "N": N, "N1": N1, "N2": N2, "N3": N3, "N4": N4, "N_spectral": N_spec,
        "P": P, "P1": P1, "P2": P2, "P3": P3, "P4": P4, "P5": P5, "P6": P6,
        "P_spectral": P_spec,
        "N3_split": bar_tilde_split(_d(u1h, 2), _d(w, 1), _d(w, 2), -1.0),
        "P1_split": bar_tilde_split(lap_u1, _d(th, 1), lap_th, -1.0),
        "P2_split": bar_tilde_split(_d(th, 2), _d(w, 1), lap_th, -1.0),
        "P5_split": bar_tilde_split(_d(u1h, 2), _d(th, 1, 2), lap_th, -2.0),
        # d2 u2 = -d1 u1
        "P6_split": bar_tilde_split(_d(th, 2, 2), _d(u1h, 1), lap_th, 2.0),
        "diss_omega": diss_w, "diss_theta": diss_t,
        "lhs_rate": N + P - diss_w - diss_t,
        "spectral_tail": tail,
        "flags": ["underresolved"] if tail > RESOLUTION_WARN else [],
    }


def l2_budget(state: State, params: PhysParams | None = None) -> dict:
    """1/2 d/dt(|u|^2 + |theta|^2) = -nu|d1 u|^2 - kappa|d1 theta|^2."""
    params = params or PhysParams()
    n = NormWeights(state.grid)
    aw, at = _sq(state.omega_hat.coeffs), _sq(state.theta_hat.coeffs)
    dw = params.nu * float(np.sum(n.d1_l2_u * aw))
    dt_ = params.kappa * float(np.sum(n.d1_l2_theta * at))
    energy = 0.5 * float(np.sum(n.l2_u * aw) + np.sum(n.l2_theta * at))
    return {"t": state.t, "energy": energy, "diss_omega": dw, "diss_theta": dt_,
            "lhs_rate": -dw - dt_}


_BUDGETS = {"l2": l2_budget, "h1": h1_budget, "h2": h2_budget}


def _check_uniform(states: Sequence[State]) -> float:
    if len(states) < 3:
        raise ValueError("need at least three stored states")
    t = np.array([s.t for s in states])
    h = np.diff(t)
    if np.any(h <= 0) or np.ptp(h) > 1e-9 * h.max():
        raise ValueError("stored states must be equally spaced in time")
    return float(h[0])


def budget_closure(states: Sequence[State], params: PhysParams, level: str = "h1") -> dict:
    """Centered-difference d/dt(energy) against the predicted rate.

    Returns the interior times, both rates and the residual scaled by the
    largest term in the balance.
    """
    fn = _BUDGETS[level]
    h = _check_uniform(states)
    b = [fn(s, params) for s in states]
    e = np.array([x["energy"] for x in b])
    times, lhs, rhs, rel = [], [], [], []
    for i in range(1, len(b) - 1):
        de = (e[i + 1] - e[i - 1]) / (2 * h)
        pred = b[i]["lhs_rate"]
        scale = max(abs(de), abs(pred), b[i]["diss_omega"] + b[i]["diss_theta"], 1e-300)
        times.append(b[i]["t"])
        lhs.append(de)
        rhs.append(pred)
        rel.append(abs(de - pred) / scale)
    rel = np.array(rel)
    return {"level": level, "t": np.array(times), "d_energy_dt": np.array(lhs),
            "predicted": np.array(rhs), "relative_residual": rel,
            "max_relative_residual": float(rel.max())}


# -- averaged and oscillatory subsystems ---------------------------------------


def averaged_system_residual(states: Sequence[State], params: PhysParams,
                             which: str = "bar") -> dict:
    """Residuals of the horizontally averaged or oscillatory equations.

    ``which="bar"``:   d/dt thetabar + avg(u.grad theta~) = 0 and
                       d/dt u1bar + avg(u.grad u1~) = 0.
    ``which="tilde"``: d/dt theta~ + (u.grad theta~)~ + u2 d2 thetabar
                       - kappa d11 theta~ + u2~ = 0.

    Time derivatives are centered differences over the stored states, so the
    residual is O(h^2) in their spacing. Returned values are L2 residuals,
    also relative to the L2 norm of the time derivative.
    """
    if which not in ("bar", "tilde"):
        raise ValueError(f"which must be 'bar' or 'tilde', got {which!r}")
    h = _check_uniform(states)
    g = states[0].grid
    coup = 1.0 if params.buoyancy_coupling else 0.0
    abs_res, rel_res, times = [], [], []
    for i in range(1, len(states) - 1):
        s = states[i]
        u1h, u2h = velocity_from_vorticity(s)
        u1, u2 = _phys(u1h), _phys(u2h)
        th = s.theta_hat
        th_b, th_t = average_spectrum(th), oscillation_spectrum(th)
        if which == "bar":
            pairs = []
            dth = (states[i + 1].theta_hat.coeffs[:, 0]
                   - states[i - 1].theta_hat.coeffs[:, 0]) / (2 * h)
            flux = _advect_hat(u1, u2, th_t).coeffs[:, 0]
            pairs.append((dth, flux))
            ua = velocity_from_vorticity(states[i + 1])[0].coeffs[:, 0]
            ub = velocity_from_vorticity(states[i - 1])[0].coeffs[:, 0]
            pairs.append(((ua - ub) / (2 * h),
                          _advect_hat(u1, u2, oscillation_spectrum(u1h)).coeffs[:, 0]))
            worst_abs = worst_rel = 0.0
            for dt_col, rest in pairs:
                # column of m1 = 0 coefficients: L2 over the strip via Parseval
                r = math.sqrt(g.area * float(np.sum(_sq(dt_col + rest))))
                sc = math.sqrt(g.area * float(np.sum(_sq(dt_col))))
                worst_abs = max(worst_abs, r)
                worst_rel = max(worst_rel, r / sc if sc > 0 else 0.0)
        else:
            dth = oscillation_spectrum(
                (states[i + 1].theta_hat - states[i - 1].theta_hat) * (1.0 / (2 * h)))
            adv = oscillation_spectrum(_advect_hat(u1, u2, th_t))
            lift = dealias(forward(Field(g, u2 * _phys(_d(th_b, 2)))))
            diff = Spectrum(g, params.kappa * g.k1**2 * th_t.coeffs)
            res = dth + adv + lift + diff + coup * oscillation_spectrum(u2h)
            r = math.sqrt(_nsq(res))
            sc = math.sqrt(_nsq(dth))
            worst_abs, worst_rel = r, (r / sc if sc > 0 else 0.0)
        times.append(s.t)
        abs_res.append(worst_abs)
        rel_res.append(worst_rel)
    return {"which": which, "t": np.array(times), "abs": np.array(abs_res),
            "rel": np.array(rel_res), "max_abs": float(max(abs_res)),
            "max_rel": float(max(rel_res))}


# -- decay fits and stratification ------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    available: bool
    rate: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")
    n_samples: int = 0
    t_start: float = float("nan")
    t_end: float = float("nan")
    t_floor: float | None = None
    reason: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def decay_fit(times, values, t0: float = 1.0, floor: float = 1e-12,
              t1: float | None = None, min_samples: int = 10) -> DecayFit:
    """Least-squares fit log(values) = a - c t on [t0, min(t1, T_floor)].

    T_floor is the first time the values fall below ``floor``; samples from
    there on are excluded since they only carry round-off.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    below = np.nonzero(v < floor)[0]
    t_floor = float(t[below[0]]) if below.size else None
    end = t_floor if t_floor is not None else np.inf
    if t1 is not None:
        end = min(end, t1)
    sel = (t >= t0) & (t < end) & (v >= floor) if t_floor is not None else (
        (t >= t0) & (t <= end) & (v >= floor))
    n = int(sel.sum())
    if n < min_samples:
        return DecayFit(False, n_samples=n, t_floor=t_floor,
                        reason=f"only {n} samples in the fit window (need {min_samples})")
    ts, ys = t[sel], np.log(v[sel])
    slope, intercept = np.polyfit(ts, ys, 1)
    pred = intercept + slope * ts
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(True, rate=float(-slope), intercept=float(intercept), r2=r2,
                    n_samples=n, t_start=float(ts[0]), t_end=float(ts[-1]),
                    t_floor=t_floor)


def stratification_metrics(state: State) -> dict:
    """How far the temperature has relaxed towards a horizontally uniform profile.

    ``total_profile`` is the averaged total temperature x2 + thetabar; the
    background is stably stratified where its x2-derivative is positive.
    """
    g = state.grid
    th = state.theta_hat
    bar = horizontal_average(th)
    n = state_norms(state)
    til = math.sqrt(max(_nsq(oscillation_spectrum(th)), 0.0))
    total = Profile(g, bar.values + g.x2_nodes)
    dbar = np.fft.ifft(1j * (np.pi / g.L) * np.fft.fftfreq(g.n2, 1.0 / g.n2)
                       * th.coeffs[:, 0], norm="forward").real
    return {
        "t": state.t,
        "osc_fraction": n["osc_fraction"],
        "theta_bar_l2": bar.l2_norm(),
        "theta_tilde_l2": til,
        "min_dTheta_bar_dx2": float(np.min(1.0 + dbar)),
        "total_profile": total,
    }
