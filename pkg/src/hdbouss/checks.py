"""Seeded invariant batteries behind ``hdbouss check``.

Each check reports its module, the measured value and the threshold it is
held to; a suite passes when every check does.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import decomposition as dec
from . import diagnostics as diag
from . import inequalities as ineq
from .grid import Field, derivative, forward, inverse, l2_norm_sq_spectral, make_grid
from .initial import random_state
from .state import velocity_from_vorticity

SUITES = ("grid", "decomposition", "inequalities", "budget")
DEFAULT_SEEDS = {"grid": 20, "decomposition": 100, "inequalities": 500, "budget": 100}


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "threshold"):
            if not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


def _le(name, module, value, threshold, detail=""):
    value = float(value)
    return Check(name, module, value, threshold, bool(value <= threshold), detail)


def _default_grid():
    return make_grid(n1=128, n2=256, half_width=10.0)


def grid_checks(seeds: int, grid=None) -> list[Check]:
    g = grid or _default_grid()
    rt = parseval = 0.0
    for s in range(seeds):
        f = ineq.random_field(g, s)
        scale = np.abs(f.values).max()
        rt = max(rt, np.abs(inverse(forward(f)).values - f.values).max() / scale)
        direct = np.sum(f.values**2) * g.cell
        parseval = max(parseval, abs(l2_norm_sq_spectral(forward(f).coeffs, g) - direct) / direct)

    # sin(2 pi x1) exp(-x2^2) and its exact derivatives
    X1, X2 = g.mesh
    f = Field(g, np.sin(2 * np.pi * X1) * np.exp(-(X2**2)))
    d1 = 2 * np.pi * np.cos(2 * np.pi * X1) * np.exp(-(X2**2))
    d2 = -2 * X2 * np.sin(2 * np.pi * X1) * np.exp(-(X2**2))
    sf = forward(f)
    e1 = np.abs(inverse(derivative(sf, 1)).values - d1).max()
    e2 = np.abs(inverse(derivative(sf, 2)).values - d2).max()
    return [
        _le("round_trip_rel", "grid_spectral", rt, 1e-12),
        _le("parseval_rel", "grid_spectral", parseval, 1e-12),
        _le("derivative_x1_abs", "grid_spectral", e1, 1e-10),
        _le("derivative_x2_abs", "grid_spectral", e2, 1e-10),
    ]


def decomposition_checks(seeds: int, grid=None) -> list[Check]:
    g = grid or _default_grid()
    worst = {"pythagoras_residual_rel": 0.0, "bar_tilde_inner_rel": 0.0,
             "div_bar_max": 0.0, "div_tilde_max": 0.0, "ubar2_max": 0.0}
    routes = 0.0
    for s in range(seeds):
        st = random_state(g, seed=s, epsilon=1.0)
        u1, u2 = (inverse(x) for x in velocity_from_vorticity(st))
        theta = inverse(st.theta_hat)
        rep = dec.decomposition_report(u1, u2, theta)
        for k in worst:
            worst[k] = max(worst[k], rep[k])
        a = dec.horizontal_average(theta).values
        b = dec.horizontal_average_quadrature(theta).values
        routes = max(routes, np.abs(a - b).max() / np.abs(theta.values).max())
    return [
        _le("pythagoras_residual_rel", "decomposition", worst["pythagoras_residual_rel"], 1e-11),
        _le("bar_tilde_inner_rel", "decomposition", worst["bar_tilde_inner_rel"], 1e-11),
        _le("div_bar_max", "decomposition", worst["div_bar_max"], 1e-10),
        _le("div_tilde_max", "decomposition", worst["div_tilde_max"], 1e-10),
        _le("ubar2_max", "decomposition", worst["ubar2_max"], 1e-12),
        _le("average_routes_rel", "decomposition", routes, 1e-13),
    ]


def inequality_checks(seeds: int, grid=None) -> list[Check]:
    g = grid or _default_grid()
    mod = "analysis_inequalities"
    out = []
    target = 1 / (2 * math.pi)
    pl2 = ineq.ensemble_stats("POINCARE_L2", g, range(seeds))
    out.append(_le("poincare_l2_max_vs_1/(2pi)", mod, abs(pl2["max_ratio"] - target), 1e-9,
                   f"max ratio {pl2['max_ratio']!r}"))
    gg1 = ineq.ensemble_stats("GG1", g, range(seeds))
    out.append(_le("gg1_max_ratio", mod, gg1["max_ratio"], math.sqrt(2) + 1e-6))

    X1, X2 = g.mesh
    gauss = Field(g, np.exp(-(X2**2)) * (1 + 0.5 * np.cos(2 * np.pi * X1)))
    r = ineq.inequality_ratio("GG1", gauss).ratio
    out.append(_le("gg1_gaussian_oracle_abs", mod, abs(r - (math.pi / 2) ** -0.25), 1e-10))

    # two disjoint seed sets of the same size: 0..N-1 and N..2N-1
    for v in ("ANI", "AN2", "TWO_GG"):
        a = ineq.ensemble_stats(v, g, range(seeds))["max_ratio"]
        b = ineq.ensemble_stats(v, g, range(seeds, 2 * seeds))["max_ratio"]
        spread = abs(a - b) / max(a, b)
        out.append(_le(f"{v.lower()}_max_ratio_spread", mod, spread, 0.2,
                       f"seed sets {a!r} / {b!r}"))
    return out


def budget_checks(seeds: int, grid=None) -> list[Check]:
    g = grid or _default_grid()
    mod = "diagnostics_budget"
    vanish = {k: 0.0 for k in ("M31", "N31", "P11", "P21", "P51", "P61")}
    m_rel = n_rel = p_rel = split_rel = 0.0
    for s in range(seeds):
        # O(1) amplitude so the absolute bound on the vanishing terms has teeth
        st = random_state(g, seed=s, epsilon=1.0)
        b1, b2 = diag.h1_budget(st), diag.h2_budget(st)
        vanish["M31"] = max(vanish["M31"], abs(b1["M3_split"].bar_bar))
        for term in ("N3", "P1", "P2", "P5", "P6"):
            key = term + "1"
            vanish[key] = max(vanish[key], abs(b2[term + "_split"].bar_bar))
        m_rel = max(m_rel, abs(b1["M"] - b1["M_spectral"]) / abs(b1["M_spectral"]))
        n_rel = max(n_rel, abs(b2["N"] - b2["N_spectral"]) / abs(b2["N_spectral"]))
        p_rel = max(p_rel, abs(b2["P"] - b2["P_spectral"]) / abs(b2["P_spectral"]))
        split_rel = max(split_rel, abs(b1["M3_split"].total - b1["M3"]) / abs(b1["M3"]))
    out = [_le(f"{k}_max_abs", mod, v, 1e-12) for k, v in vanish.items()]
    out += [
        _le("M_terms_vs_spectral_rel", mod, m_rel, 1e-10),
        _le("N_terms_vs_spectral_rel", mod, n_rel, 1e-9),
        _le("P_terms_vs_spectral_rel", mod, p_rel, 1e-9),
        _le("M3_split_sum_rel", mod, split_rel, 1e-11),
    ]
    return out


_RUNNERS = {
    "grid": grid_checks,
    "decomposition": decomposition_checks,
    "inequalities": inequality_checks,
    "budget": budget_checks,
}


def check_suite(which: str, seed_count: int | None = None) -> dict:
    """Run one battery (or ``all``) and return a JSON-ready report."""
    if which == "all":
        names = SUITES
    elif which in SUITES:
        names = (which,)
    else:
        raise ValueError(f"unknown suite {which!r}; choose from {', '.join(SUITES + ('all',))}")
    if seed_count is not None and seed_count < 1:
        raise ValueError("seed count must be positive")
    checks = []
    for name in names:
        n = seed_count if seed_count is not None else DEFAULT_SEEDS[name]
        checks.extend(_RUNNERS[name](n))
    failures = [f"{c.module}: {c.name} = {c.value!r} exceeds {c.threshold!r}"
                for c in checks if not c.passed]
    return {
        "schema": 1,
        "suite": which,
        "seed_count": seed_count,
        "checks": [c.as_dict() for c in checks],
        "failures": failures,
        "passed": not failures,
    }
