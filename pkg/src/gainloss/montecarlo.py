"""Simulated panels, unconditional moments, parameter sweeps and conditional series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model1, model2
from .numerics import Grid2D, QuadratureRule, gauss_hermite
from .preferences import PreferenceParams
from .processes import MarketState, ProcessParams, dividend_growth, sample_path

SWEEP_AXES = ("lambda", "b", "gamma", "theta", "beta")
MIN_RETAINED = 10_000


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 200
    horizon: int = 600
    burn_in: int = 100
    seed: int = 20240101
    enforce_size: bool = True

    def __post_init__(self):
        if self.n_paths < 1 or self.horizon < 2:
            raise ValueError("need n_paths >= 1 and horizon >= 2")
        if not 0 <= self.burn_in < self.horizon - 1:
            raise ValueError("burn_in must be smaller than horizon - 1")
        if self.enforce_size and self.n_paths * (self.horizon - self.burn_in) < MIN_RETAINED:
            raise ValueError(f"panel retains fewer than {MIN_RETAINED} path-dates")


@dataclass(frozen=True)
class MomentReport:
    rf_mean: float
    rf_sd: float
    pd_mean: float
    pd_sd: float
    erp_mean: float
    erp_sd: float
    n_paths: int
    horizon: int
    burn_in: int
    seed: int
    se: dict = field(default_factory=dict, compare=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in
                ("rf_mean", "rf_sd", "pd_mean", "pd_sd", "erp_mean", "erp_sd")}


def simulate_states(params: ProcessParams, cfg: SimConfig):
    """(eps, log Y) panels of shape (n_paths, horizon), one counter-based stream per path."""
    eps = np.empty((cfg.n_paths, cfg.horizon))
    ly = np.empty((cfg.n_paths, cfg.horizon))
    for p in range(cfg.n_paths):
        path = sample_path(params, cfg.horizon, cfg.seed, index=p)
        eps[p] = path.eps_c_series
        ly[p] = path.log_y_series
    return eps, ly


def _prices(prefs, params, model, eps, ly, solution, law, rule):
    if model == 2:
        law = law or model2.DEFAULT_LAW
        mom = model2.moments2(prefs, params, rule)
        try:
            pd = model2.pd2(prefs, params, eps, ly, law, mom)
        except model2.PricingError:
            gc = model2.growth_condition2(prefs, params, ly, law)
            k = np.unravel_index(np.argmax(gc), np.shape(gc))
            raise model2.PricingError(
                f"growth condition violated at state eps_c={eps[k]:.6g}, "
                f"Y={np.exp(ly[k]):.6g}") from None
        return model2.rf2(prefs, params, eps, mom), pd
    rf, pd, _ = model1.prices1_arrays(solution, eps.ravel(), ly.ravel())
    return rf.reshape(eps.shape), pd.reshape(eps.shape)


def simulate_moments(prefs: PreferenceParams, params: ProcessParams, model: int,
                     cfg: SimConfig | None = None, solution: model1.HSolution | None = None,
                     law: str | None = None, rule: QuadratureRule | None = None) -> MomentReport:
    """Unconditional means and s.d. of R_f, S/D and the realized excess return.

    States always follow the AR(1) law for log Y. The realized excess return is
    R_{S,t+1} - R_{f,t+1}, with R_{S,t+1} = eps_d (S/D_{t+1} + 1) / S/D_t.
    """
    cfg = cfg or SimConfig()
    rule = rule or gauss_hermite(21)
    if model not in (1, 2):
        raise ValueError("model must be 1 or 2")
    if model == 1:
        if solution is None:
            solution = model1.solve_h(prefs, params, rule=rule, law=law or model1.DEFAULT_LAW)
        model1._check_solution(solution, prefs, params)
    eps, ly = simulate_states(params, cfg)
    rf, pd = _prices(prefs, params, model, eps, ly, solution, law, rule)
    y = np.exp(ly)
    ed = dividend_growth(eps[:, 1:], y[:, :-1], y[:, 1:])
    rs = ed * (pd[:, 1:] + 1) / pd[:, :-1]
    xr = rs - rf[:, :-1]
    b = cfg.burn_in
    lv = slice(b, None)
    rv = slice(b, None)
    rf_k, pd_k, xr_k = rf[:, lv], pd[:, lv], xr[:, rv]
    se = {}
    for name, a in (("rf_mean", rf_k), ("pd_mean", pd_k), ("erp_mean", xr_k)):
        pm = a.mean(axis=1)
        se[name] = float(pm.std(ddof=1) / np.sqrt(pm.size)) if pm.size > 1 else float("nan")
    return MomentReport(float(rf_k.mean()), float(rf_k.std(ddof=1)),
                        float(pd_k.mean()), float(pd_k.std(ddof=1)),
                        float(xr_k.mean()), float(xr_k.std(ddof=1)),
                        cfg.n_paths, cfg.horizon, cfg.burn_in, cfg.seed, se)


def with_axis(prefs: PreferenceParams, axis: str, value: float) -> PreferenceParams:
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    return prefs.replace(**{"lam" if axis == "lambda" else axis: float(value)})


def sweep(prefs_base: PreferenceParams, params: ProcessParams, model: int, axis: str,
          values, cfg: SimConfig | None = None, law: str | None = None,
          grid: Grid2D | None = None, rule: QuadratureRule | None = None):
    """One MomentReport per value on a shared seed; Model I re-solves h per value."""
    out = []
    for v in values:
        prefs = with_axis(prefs_base, axis, v)
        sol = None
        if model == 1:
            sol = model1.solve_h(prefs, params, grid, rule=rule, law=law or model1.DEFAULT_LAW)
        out.append((float(v), simulate_moments(prefs, params, model, cfg, sol, law, rule)))
    return out


def conditional_series(prefs: PreferenceParams, params: ProcessParams, model: int,
                       axis: str, values, fixed: float, solution=None, law: str | None = None,
                       rule: QuadratureRule | None = None):
    """Rows (x, r_f, pd, erp) along eps_c (axis='eps', fixed=Y) or Y (axis='y', fixed=eps_c)."""
    if axis not in ("eps", "y"):
        raise ValueError("axis must be 'eps' or 'y'")
    if model == 1 and solution is None:
        solution = model1.solve_h(prefs, params, rule=rule, law=law or model1.DEFAULT_LAW)
    rows = []
    for x in values:
        st = MarketState(float(x), float(fixed)) if axis == "eps" else MarketState(float(fixed), float(x))
        if model == 2:
            p = model2.price2(prefs, params, st, rule, law or model2.DEFAULT_LAW)
        else:
            p = model1.price1(prefs, params, solution, st)
        rows.append({"x": float(x), "rf": p.r_f, "pd": p.pd, "erp": p.erp})
    return rows
