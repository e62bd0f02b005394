"""Acceptance criteria at desk scale (128 x 256, L = 10).

Each test prints one PASS/FAIL line and fails when its criterion does. Preset
runs are shared across tests through a session cache; the whole module takes
about twelve minutes on one core.
"""

import functools
import math

import numpy as np
import pytest

from hdbouss import PhysParams, run
from hdbouss.checks import budget_checks, grid_checks, inequality_checks
from hdbouss.decomposition import horizontal_average
from hdbouss.diagnostics import budget_closure
from hdbouss.experiments import PRESETS, load_config, run_experiment
from hdbouss.grid import make_grid
from hdbouss.initial import build_initial

from acceptance_log import report
from oracles import linear_matrix

pytestmark = pytest.mark.acceptance


def _keep_for(name):
    cfg = load_config(name)
    if name == "stratification_long":
        return lambda t: t >= 0.9 * cfg.T - 1e-9
    if name == "linear_mode_oracle":
        return lambda t: t == 0 or t >= cfg.T - 1e-9
    return False


@functools.lru_cache(maxsize=None)
def preset_run(name, **overrides):
    cfg = load_config(name)
    if overrides:
        cfg = cfg.replace(**overrides)
    return run_experiment(cfg, write=False, keep_states=_keep_for(name) if not overrides else False)


def _relative_l2_drift(records):
    e = np.array([r.l2_u**2 + r.l2_theta**2 for r in records])
    return float(np.abs(e - e[0]).max() / e[0])


def test_c01_spectral_kernel():
    checks = {c.name: c for c in grid_checks(20)}
    rt = checks["round_trip_rel"].value
    der = max(checks["derivative_x1_abs"].value, checks["derivative_x2_abs"].value)
    report(1, "spectral kernel", rt <= 1e-12 and der <= 1e-10,
           f"round trip {rt:.2e} <= 1e-12, derivatives {der:.2e} <= 1e-10")


def test_c02_divergence_and_mean_vertical_velocity():
    worst_div = worst_u2 = 0.0
    bad = []
    for name in PRESETS:
        s = preset_run(name).summary
        worst_div = max(worst_div, s["max_div"])
        worst_u2 = max(worst_u2, s["max_bar_u2"])
        if s["max_div"] > 1e-12 or s["max_bar_u2"] > 1e-12 or s["failure"]:
            bad.append(name)
    report(2, "div u = 0 and ubar2 = 0 at every step", not bad,
           f"max div {worst_div:.2e}, max |ubar2| {worst_u2:.2e} over {len(PRESETS)} presets"
           + (f"; offending: {bad}" if bad else ""))


def test_c03_inviscid_conservation():
    a = _relative_l2_drift(preset_run("inviscid_conservation").result.records)
    b = _relative_l2_drift(
        preset_run("inviscid_conservation", dt=5e-4, output_every=200).result.records)
    ratio = a / b
    report(3, "inviscid conservation", a <= 1e-8 and 6.0 <= ratio <= 10.0,
           f"drift {a:.2e} (dt=1e-3) <= 1e-8, {b:.2e} (dt=5e-4), ratio {ratio:.2f} in [6, 10]")


def test_c04_l2_balance():
    res = preset_run("theorem1_smalldata", T=20.0, dt=2e-3, output_every=50).result
    recs = res.records
    e0 = recs[0].l2_u**2 + recs[0].l2_theta**2
    resid = max(abs(r.l2_u**2 + r.l2_theta**2 + 2 * (r.l2_diss_u_cum + r.l2_diss_theta_cum) - e0)
                for r in recs) / e0
    report(4, "L2 energy balance", res.ok and resid <= 1e-6,
           f"max relative residual {resid:.2e} <= 1e-6 over T=20, nu=kappa=1, dt=2e-3")


def test_c05_linear_and_heat_oracles():
    cfg = load_config("linear_mode_oracle")
    res = preset_run("linear_mode_oracle").result
    s0, s1 = res.states[0], res.states[-1]
    m1, m2 = cfg.ic_m1, cfg.ic_m2
    k1, k2 = 2 * math.pi * m1, math.pi * m2 / cfg.half_width
    ev, V = np.linalg.eig(linear_matrix(cfg.nu, cfg.kappa, k1, k2))

    def z(s):
        return np.linalg.solve(V, [s.omega_hat.coeffs[m2, m1], s.theta_hat.coeffs[m2, m1]])

    rates = np.log(z(s1) / z(s0)) / (s1.t - s0.t)
    lin_err = float(np.abs(rates - ev).max())

    heat = preset_run("heat_oracle").summary
    target = load_config("heat_oracle").kappa * 4 * math.pi**2
    heat_err = abs(heat["decay_rate"] - target)
    report(5, "linear and heat oracles", lin_err <= 1e-6 and heat_err <= 1e-6,
           f"eigen-rate error {lin_err:.2e} <= 1e-6, heat rate {heat['decay_rate']:.10f} "
           f"vs 4 pi^2 kappa {target:.10f} (error {heat_err:.2e} <= 1e-6)")


def test_c06_energy_functional_bound():
    s = preset_run("theorem1_smalldata").summary
    ratio = s["E_sup_over_E0"]
    report(6, "sup E(t) <= 2 E(0)", not s["failure"] and ratio <= 2.0,
           f"E_sup/E0 = {ratio:.6f} <= 2 (T=50, nu=kappa=1, eps=1e-2)")


def test_c07_oscillation_decay():
    s = preset_run("theorem2_smalldata").summary
    fit = s["decay_fit"]
    ok = (fit["available"] and s["decay_rate"] > 0 and s["decay_r2"] >= 0.99
          and s["decay_bound_holds"] is True)
    report(7, "exponential decay of the oscillation", ok,
           f"c = {s['decay_rate']}, r2 = {s['decay_r2']} on [{fit['t_start']}, "
           f"T_floor={fit['t_floor']}] with {fit['n_samples']} samples, "
           f"pointwise bound holds: {s['decay_bound_holds']}")


def test_c08_stratification():
    run_ = preset_run("stratification_long")
    res = run_.result
    t, osc = res.column("t"), res.column("osc_fraction")
    below = np.nonzero(osc < 1e-3)[0]
    t_below = float(t[below[0]]) if below.size else math.inf
    profiles = [horizontal_average(s.theta_hat) for s in res.states]
    steps = [math.sqrt(np.sum((b.values - a.values) ** 2) * a.grid.dx2)
             for a, b in zip(profiles, profiles[1:])]
    worst = max(steps)
    T = load_config("stratification_long").T
    ok = t_below < T and worst < 1e-6 and len(profiles) >= 2
    report(8, "stratification", ok,
           f"osc_fraction < 1e-3 from t = {t_below:g} (T = {T:g}); successive thetabar "
           f"L2 change over the last 10% max {worst:.2e} < 1e-6 ({len(steps)} pairs)")


def test_c09_vanishing_budget_terms():
    checks = [c for c in budget_checks(100) if c.name.endswith("1_max_abs")]
    worst = max(c.value for c in checks)
    report(9, "vanishing budget terms", all(c.passed for c in checks) and worst <= 1e-12,
           ", ".join(f"{c.name[:3]} {c.value:.1e}" for c in checks) + " (each <= 1e-12)")


def test_c10_budget_closure_convergence():
    cfg = load_config("theorem2_smalldata")
    g = make_grid(cfg.grid_spec)
    s0 = build_initial(cfg.ic_preset, g, **cfg.ic_kwargs())
    p = PhysParams(cfg.nu, cfg.kappa, cfg.buoyancy_coupling)
    out = {}
    for dt in (5e-3, 2.5e-3):
        states = run(s0, p, dt, 0.4, keep_states=True).states
        out[dt] = {lvl: budget_closure(states, p, lvl)["max_relative_residual"]
                   for lvl in ("h1", "h2")}
    ratios = {lvl: out[5e-3][lvl] / out[2.5e-3][lvl] for lvl in ("h1", "h2")}
    ok = all(3.0 <= r <= 5.0 for r in ratios.values())
    report(10, "budget closure converges", ok,
           "; ".join(f"{lvl}: {out[5e-3][lvl]:.2e} -> {out[2.5e-3][lvl]:.2e}, "
                     f"ratio {ratios[lvl]:.2f} in [3, 5]" for lvl in ratios))


def test_c11_inequality_lab():
    checks = {c.name: c for c in inequality_checks(500)}
    ok = all(c.passed for c in checks.values())
    spreads = ", ".join(f"{k.split('_max')[0].upper()} {c.value:.1%}"
                        for k, c in checks.items() if k.endswith("spread"))
    report(11, "inequality lab", ok,
           f"GG1 max {checks['gg1_max_ratio'].value:.4f} <= sqrt2 + 1e-6, "
           f"POINCARE |max - 1/(2pi)| {checks['poincare_l2_max_vs_1/(2pi)'].value:.1e} <= 1e-9, "
           f"spreads {spreads} (each <= 20%)")
