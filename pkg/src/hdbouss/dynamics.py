"""Time integration of the perturbation system in vorticity form.

    omega_t + u.grad(omega) = nu d11 omega + d1 theta
    theta_t + u.grad(theta) + u2 = kappa d11 theta

The horizontal diffusion is handled exactly by an integrating factor and the
remaining terms by Kutta's third-order Runge-Kutta scheme. Kutta's stage
abscissae (0, 1/2, 1) are monotone, so every integrating factor applied is a
decay exp(-lambda h) with h >= 0. The dissipation integrals that enter the
energy functional are integrated alongside the state with the same stage
weights, which keeps the budget closure at the scheme's own accuracy instead
of that of a quadrature over the output samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import Grid, Spectrum
from .state import NormWeights, PhysParams, State, _sq, state_norms

log = logging.getLogger(__name__)

# Kutta RK3 in integrating-factor form
_C2 = 0.5
_B = (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0)


class NonFiniteStateError(FloatingPointError):
    """Raised when a step produces NaN or Inf; ``dump`` describes the state."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass(frozen=True)
class RHSResult:
    d_omega: Spectrum
    d_theta: Spectrum
    max_u1: float
    max_u2: float

    def cfl(self, dt: float) -> float:
        g = self.d_omega.grid
        return dt * max(self.max_u1 / g.dx1, self.max_u2 / g.dx2)


class Stepper:
    """Precomputed operators for one grid and parameter set.

    Works on raw half-spectrum arrays; :meth:`step` wraps them in a State.
    """

    def __init__(self, grid: Grid, params: PhysParams, dt: float):
        if not (math.isfinite(dt) and dt > 0):
            raise ValueError(f"dt must be positive, got {dt}")
        self.grid, self.params, self.dt = grid, params, dt
        g = grid
        self.ik1 = 1j * g.k1
        self.ik2 = 1j * g.k2
        self.inv_ksq = g.inv_ksq
        self.mask = g.dealias_mask.astype(float)
        k1sq = g.k1**2
        self.lam_w = params.nu * k1sq
        self.lam_t = params.kappa * k1sq
        self.ew_full = np.exp(-self.lam_w * dt)
        self.ew_half = np.exp(-self.lam_w * dt * _C2)
        self.et_full = np.exp(-self.lam_t * dt)
        self.et_half = np.exp(-self.lam_t * dt * _C2)
        self.coupling = 1.0 if params.buoyancy_coupling else 0.0
        self.weights = NormWeights(g)
        # max over the last step's first stage, spectral bounds on sup norms
        self.last_div = 0.0
        self.last_ubar2 = 0.0
        self.last_cfl = 0.0

    # -- right-hand side ---------------------------------------------------

    def rhs_arrays(self, w: np.ndarray, th: np.ndarray, track: bool = True):
        """Nonlinear plus coupling terms; returns (dw, dth, max|u1|, max|u2|).

        With ``track`` the divergence and u2bar bounds are refreshed and the
        velocity maxima computed; later stages skip that work.
        """
        g = self.grid
        psi = -w * self.inv_ksq
        u1h = -self.ik2 * psi
        u2h = self.ik1 * psi
        stack = np.stack((u1h, u2h, self.ik1 * w, self.ik2 * w,
                          self.ik1 * th, self.ik2 * th))
        u1, u2, w1, w2, t1, t2 = sfft.irfft2(stack, s=g.shape, norm="forward")
        prods = sfft.rfft2(np.stack((u1 * w1 + u2 * w2, u1 * t1 + u2 * t2)),
                           norm="forward")
        dw = -self.mask * prods[0] + self.coupling * self.ik1 * th
        dth = -self.mask * prods[1] - self.coupling * u2h
        if not track:
            return dw, dth, 0.0, 0.0
        # spectral bounds: sup|f| <= sum of |coefficients| with Hermitian weights
        div = self.ik1 * u1h + self.ik2 * u2h
        self.last_div = float(np.sum(g.weights * np.abs(div)))
        self.last_ubar2 = float(np.sum(np.abs(u2h[:, 0])))
        return dw, dth, float(np.abs(u1).max()), float(np.abs(u2).max())

    def rhs(self, state: State) -> RHSResult:
        dw, dth, m1, m2 = self.rhs_arrays(state.omega_hat.coeffs, state.theta_hat.coeffs)
        res = RHSResult(Spectrum(self.grid, dw), Spectrum(self.grid, dth), m1, m2)
        c = res.cfl(self.dt)
        if c > 0.5:
            log.warning("CFL number %.3g exceeds 0.5 at t=%g", c, state.t)
        return res

    # -- dissipation rates ---------------------------------------------------

    def rates(self, w: np.ndarray, th: np.ndarray) -> np.ndarray:
        """[nu|d1 u|^2, kappa|d1 theta|^2 (L2), same in H2, H2 energy]."""
        nw, p = self.weights, self.params
        aw, at = _sq(w), _sq(th)
        return np.array([
            p.nu * np.sum(nw.d1_l2_u * aw),
            p.kappa * np.sum(nw.d1_l2_theta * at),
            p.nu * np.sum(nw.d1_h2_u * aw),
            p.kappa * np.sum(nw.d1_h2_theta * at),
            np.sum(nw.h2_u * aw) + np.sum(nw.h2_theta * at),
        ])

    # -- one step ------------------------------------------------------------

    def advance(self, w: np.ndarray, th: np.ndarray):
        """One step on raw arrays.

        Returns (w, th, dissipation increments[4], H2 energy at the start,
        CFL number of the first stage).
        """
        dt = self.dt
        r1 = self.rates(w, th)
        n1w, n1t, a1, b1 = self.rhs_arrays(w, th)
        cfl = dt * max(a1 / self.grid.dx1, b1 / self.grid.dx2)

        w2 = self.ew_half * (w + 0.5 * dt * n1w)
        t2 = self.et_half * (th + 0.5 * dt * n1t)
        r2 = self.rates(w2, t2)
        n2w, n2t, _, _ = self.rhs_arrays(w2, t2, track=False)

        w3 = self.ew_full * (w - dt * n1w) + 2.0 * dt * self.ew_half * n2w
        t3 = self.et_full * (th - dt * n1t) + 2.0 * dt * self.et_half * n2t
        r3 = self.rates(w3, t3)
        n3w, n3t, _, _ = self.rhs_arrays(w3, t3, track=False)

        b1_, b2_, b3_ = _B
        w_new = (self.ew_full * (w + dt * b1_ * n1w)
                 + dt * b2_ * self.ew_half * n2w + dt * b3_ * n3w)
        t_new = (self.et_full * (th + dt * b1_ * n1t)
                 + dt * b2_ * self.et_half * n2t + dt * b3_ * n3t)
        incr = dt * (b1_ * r1[:4] + b2_ * r2[:4] + b3_ * r3[:4])

        self.last_cfl = cfl
        if not (np.all(np.isfinite(incr)) and np.all(np.isfinite(w_new))
                and np.all(np.isfinite(t_new))):
            dump = {
                "nonfinite_omega": int(np.count_nonzero(~np.isfinite(w_new))),
                "nonfinite_theta": int(np.count_nonzero(~np.isfinite(t_new))),
                "h2_energy_before": float(r1[4]),
                "cfl": cfl,
            }
            raise NonFiniteStateError("non-finite state after step", dump)
        return w_new, t_new, incr, float(r1[4]), cfl

    def step(self, state: State) -> State:
        w, th, *_ = self.advance(state.omega_hat.coeffs, state.theta_hat.coeffs)
        return State(Spectrum(self.grid, w), Spectrum(self.grid, th), state.t + self.dt)


def nonlinear_rhs(state: State, params: PhysParams, dt: float | None = None) -> RHSResult:
    """Advection and coupling terms (everything except horizontal diffusion)."""
    return Stepper(state.grid, params, dt or 1.0).rhs(state)


def step(state: State, params: PhysParams, dt: float) -> State:
    return Stepper(state.grid, params, dt).step(state)


# -- full runs -----------------------------------------------------------------


@dataclass
class RunResult:
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    final: State | None = None
    failure: dict | None = None
    flags: set = field(default_factory=set)
    smallness: float = 0.0
    steps_taken: int = 0

    @property
    def ok(self) -> bool:
        return self.failure is None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def steps_for(T: float, dt: float, what: str = "T") -> int:
    """Number of steps of size dt covering T; T must be a multiple of dt."""
    n = round(T / dt)
    if n < 0 or abs(n * dt - T) > 1e-9 * max(T, dt):
        raise ValueError(f"{what}={T} is not a multiple of dt={dt}")
    return int(n)


def run(state0: State, params: PhysParams, dt: float, T: float, *,
        output_every: int = 1, keep_states: bool = False, on_output=None,
        cfl_limit: float = 0.5, blowup_factor: float = 1e6,
        invariant_tol: float = 1e-12) -> RunResult:
    """Integrate from ``state0`` to time ``T``.

    A diagnostics record is produced every ``output_every`` steps (and at the
    start and the end). ``keep_states`` keeps the states at record times; it
    may also be a predicate on t to keep only some of them. ``on_output(step_index, state, record)`` is called for
    each record, which is how snapshots are written. Blow-up, CFL violation
    and non-finite values stop the run and set ``failure``; the records up to
    that point are kept.
    """
    from .diagnostics import make_record

    if output_every < 1:
        raise ValueError("output_every must be >= 1")
    nsteps = steps_for(T, dt)
    stp = Stepper(state0.grid, params, dt)
    g = state0.grid
    w, th = state0.omega_hat.coeffs.copy(), state0.theta_hat.coeffs.copy()
    t0 = state0.t

    norms0 = state_norms(state0, stp.weights)
    res = RunResult()
    res.smallness = norms0["h2_u"] + norms0["h2_theta"]
    log.info("initial smallness ||u0||_H2 + ||theta0||_H2 = %.6g", res.smallness)
    size0 = math.hypot(norms0["h2_u"], norms0["h2_theta"])

    cum = np.zeros(4)
    h2_sup = norms0["h2_u"] ** 2 + norms0["h2_theta"] ** 2
    div_max = ubar2_max = cfl_max = 0.0

    def emit(k, state, cfl):
        rec = make_record(state, params, cum=cum, h2_sup=h2_sup, div_max=div_max,
                          ubar2_max=ubar2_max, cfl=cfl, weights=stp.weights)
        res.records.append(rec)
        if keep_states is True or (callable(keep_states) and keep_states(state.t)):
            res.states.append(state)
        if on_output is not None:
            on_output(k, state, rec)

    state = state0
    stp.rates(w, th)
    _, _, a1, b1 = stp.rhs_arrays(w, th)
    emit(0, state, dt * max(a1 / g.dx1, b1 / g.dx2))

    for k in range(1, nsteps + 1):
        stp.last_div = stp.last_ubar2 = 0.0
        try:
            w, th, incr, h2_before, cfl = stp.advance(w, th)
        except NonFiniteStateError as exc:
            res.failure = {"kind": "nonfinite", "t": t0 + (k - 1) * dt, **exc.dump}
            log.error("non-finite state at step %d: %s", k, exc.dump)
            break
        cum += incr
        div_max = max(div_max, stp.last_div)
        ubar2_max = max(ubar2_max, stp.last_ubar2)
        cfl_max = max(cfl_max, cfl)
        t = t0 + k * dt
        h2_now = float(stp.rates(w, th)[4])
        h2_sup = max(h2_sup, h2_now)
        res.steps_taken = k
        state = State(Spectrum(g, w), Spectrum(g, th), t)

        if cfl > cfl_limit:
            res.failure = {"kind": "cfl", "t": t, "cfl": cfl}
            log.error("CFL %.3g above %.3g at t=%g", cfl, cfl_limit, t)
        elif size0 > 0 and math.sqrt(h2_now) > blowup_factor * size0:
            res.failure = {"kind": "blowup", "t": t, "h2_norm": math.sqrt(h2_now),
                           "initial_h2_norm": size0}
            log.error("blow-up at t=%g", t)
        if res.failure is not None or k % output_every == 0 or k == nsteps:
            emit(k, state, cfl)
        if res.failure is not None:
            break

    if div_max > invariant_tol:
        res.flags.add("divergence")
    if ubar2_max > invariant_tol:
        res.flags.add("ubar2")
    if res.failure is not None and res.failure["kind"] == "nonfinite":
        res.flags.add("nonfinite")
    for r in res.records:
        res.flags.update(r.flags)
    res.final = state
    return res
