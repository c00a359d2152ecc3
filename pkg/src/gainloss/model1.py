"""Prices with prospective gain-loss utility (gamma > 0).

The price-dividend ratio is S/D = h / (Lambda K) with K = 1 - beta E[eps^(1-theta)]
and h the fixed point of

    T h(eps, Y) = gamma Gamma(F(eps)) beta E_t[eps'^(1-theta) Y (Lambda' K + h') / (Y' Lambda' K + h')]
                + beta E_t[eps'^(1-theta) (Y/Y') (h' + Lambda' K)].

Because eps_t only enters through Gamma(F(eps_t)), T h = gamma Gamma beta A1(Y) + beta A2(Y),
where A1, A2 are conditional expectations over next-period states. h is stored on
a grid and read by bilinear interpolation in (F(eps), log Y) inside the expectations. Off the grid,
h is evaluated by applying T once to the stored surface (Nystrom extension), so
pricing at arbitrary states is consistent with the operator to solver precision.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .model2 import EquilibriumPrices, PricingError
from .numerics import (Grid2D, GridFunction, NonConvergenceError, BracketError,
                       QuadratureRule, bisect, default_grid, eps_nodes, fixed_point,
                       gauss_hermite, linear_weights, interp)
from .preferences import PreferenceParams, weight_contemp, weight_prosp
from .processes import (MarketState, ProcessParams, cdf_eps, lognormal_moment,
                        next_log_y, stationary_log_y)

# the AR(1) law keeps log Y stationary under the pricing measure, so the grid
# can cover its stationary mass; the Gamma(F(eps)) structure makes the eps axis
# exact, and the log Y axis carries the interpolation error
DEFAULT_LAW = "ar1"
DEFAULT_GRID = (41, 201)
CLAMP_SHARE_LIMIT = 1e-3


class GrowthConditionError(PricingError):
    pass


def growth_constant(prefs: PreferenceParams, params: ProcessParams) -> float:
    """K = 1 - beta E[eps^(1-theta)], computed once in closed form."""
    k = 1.0 - prefs.beta * lognormal_moment(params, 1 - prefs.theta)
    if not k > 0:
        raise GrowthConditionError(
            f"growth condition violated: beta E[eps^(1-theta)] = {1 - k:.6g} >= 1 "
            f"(theta={prefs.theta}, beta={prefs.beta})")
    return k


class HOperator:
    """Precomputed quadrature and interpolation data for T on a fixed grid."""

    def __init__(self, prefs: PreferenceParams, params: ProcessParams, grid: Grid2D,
                 rule: QuadratureRule | None = None, law: str = DEFAULT_LAW):
        self.prefs, self.params, self.grid, self.law = prefs, params, grid, law
        self.rule = rule = rule or gauss_hermite(21)
        self.K = growth_constant(prefs, params)
        th = prefs.theta
        self.w = rule.weights
        self.ep = eps_nodes(rule, params)                  # eps' nodes
        Fp = cdf_eps(params, self.ep)
        self.Lp = weight_contemp(prefs, Fp)                # Lambda'
        self.e1 = self.ep ** (1 - th)
        self.em = self.ep ** -th
        self.A = float(self.w @ (self.em * self.Lp))       # E[eps^-theta Lambda]
        self.B = float(self.w @ (self.e1 * self.Lp))       # E[eps^(1-theta) Lambda]
        self.gam_grid = weight_prosp(prefs, cdf_eps(params, grid.eps_axis))

        # eps-direction interpolation matrix: h(eps'_i, .) = Pe @ H. Every
        # iterate of T is affine in Gamma(F(eps)), so h is interpolated linearly
        # in F rather than in eps, which is exact along that axis
        i, wi, ci = linear_weights(cdf_eps(params, grid.eps_axis), Fp)
        Pe = np.zeros((self.ep.size, grid.eps_axis.size))
        Pe[np.arange(self.ep.size), i] += 1 - wi
        Pe[np.arange(self.ep.size), i + 1] += wi
        self.Pe = Pe
        self.eps_clamped = ci

        # next log Y from each grid log Y node
        ly = grid.logy_axis
        self.lyn = next_log_y(params, ly[:, None], rule.nodes[None, :], law)   # (ny, nq)
        self.j, self.wj, cj = linear_weights(ly, self.lyn)
        self.Yp = np.exp(self.lyn)
        self.Yr = np.exp(ly[:, None] - self.lyn)          # Y / Y'

        # clamped evaluations per operator application, and their probability
        # share weighted by the stationary density of the current log Y node
        ce = self.eps_clamped[:, None, None] | cj[None, :, :]
        self.clamp_count = int(ce.sum()) * grid.eps_axis.size
        pe = float(self.w @ self.eps_clamped)
        py = cj.astype(float) @ self.w
        st = stationary_log_y(params)
        dens = np.exp(-0.5 * (ly - st.mean) ** 2 / max(st.variance, 1e-300))
        dens = dens / dens.sum() if dens.sum() > 0 else np.full(ly.size, 1.0 / ly.size)
        self.clamp_share = float(dens @ (1 - (1 - pe) * (1 - py)))

    # -- next-period h ----------------------------------------------------------
    def _h_next(self, H, j, wj):
        """h at (eps'_i, next log Y) for index/weight arrays j, wj of shape (..., nq)."""
        He = self.Pe @ H                                   # (nq, ny)
        return He[:, j] * (1 - wj) + He[:, j + 1] * wj      # (nq, ..., nq)

    def _terms(self, hp, Yp, Yr):
        """A1 and A2 (without beta) from next-period h and Y arrays."""
        Lk = (self.Lp * self.K)[:, None, None]
        e1 = self.e1[:, None, None]
        Y = (Yp * Yr)[None]                                # current Y broadcast
        a1 = e1 * Y * (Lk + hp) / (Yp[None] * Lk + hp)
        a2 = e1 * Yr[None] * (hp + Lk)
        w = self.w
        return (np.einsum("i,isk,k->s", w, a1, w), np.einsum("i,isk,k->s", w, a2, w))

    def apply(self, H: np.ndarray) -> np.ndarray:
        """T on grid values H (ne x ny)."""
        hp = self._h_next(H, self.j, self.wj)
        a1, a2 = self._terms(hp, self.Yp, self.Yr)
        b, g = self.prefs.beta, self.prefs.gamma
        return g * b * self.gam_grid[:, None] * a1[None, :] + b * a2[None, :]

    # -- arbitrary states -------------------------------------------------------
    def state_terms(self, H, logy):
        """Next-period arrays for current log Y values (1-D)."""
        logy = np.atleast_1d(np.asarray(logy, dtype=float))
        lyn = next_log_y(self.params, logy[:, None], self.rule.nodes[None, :], self.law)
        j, wj, _ = linear_weights(self.grid.logy_axis, lyn)
        hp = self._h_next(H, j, wj)                        # (nq, S, nq)
        return lyn, np.exp(lyn), np.exp(logy[:, None] - lyn), hp

    def evaluate(self, H, eps, logy, chunk: int = 20000):
        """h, R_f, E_t[R_S] at arbitrary states (1-D arrays of equal length)."""
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        logy = np.atleast_1d(np.asarray(logy, dtype=float))
        out_h = np.empty(eps.size)
        out_rf = np.empty(eps.size)
        out_ers = np.empty(eps.size)
        b, g, K = self.prefs.beta, self.prefs.gamma, self.K
        w = self.w
        for s0 in range(0, eps.size, chunk):
            sl = slice(s0, s0 + chunk)
            _, Yp, Yr, hp = self.state_terms(H, logy[sl])
            a1, a2 = self._terms(hp, Yp, Yr)
            F = cdf_eps(self.params, eps[sl])
            Lt = weight_contemp(self.prefs, F)
            Gt = weight_prosp(self.prefs, F)
            h = g * b * Gt * a1 + b * a2
            Lk = (self.Lp * K)[:, None, None]
            a3 = np.einsum("i,isk,k->s", w,
                           self.em[:, None, None] * Yp[None] * self.Lp[:, None, None]
                           / (Yp[None] * Lk + hp), w)
            rs = (self.ep[:, None, None] * Yr[None] * (hp / self.Lp[:, None, None] + K))
            ers = Lt / h * np.einsum("i,isk,k->s", w, rs, w)
            out_h[sl] = h
            out_rf[sl] = Lt / (g * Gt * b * a3 + b * self.A)
            out_ers[sl] = ers
        return out_h, out_rf, out_ers


@dataclass
class HSolution:
    h: GridFunction
    iterations: int
    final_residual: float
    contraction_ratio_estimate: float
    clamp_count: int
    clamp_share: float = 0.0
    residual_history: list = field(default_factory=list)
    monotone: bool = True
    tol: float = 1e-10
    prefs: PreferenceParams | None = None
    params: ProcessParams | None = None
    law: str = DEFAULT_LAW
    operator: HOperator | None = field(default=None, repr=False)
    max_step_ratio: float = float("nan")
    iterate_minima: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.params is not None and self.h.eps_coord is None:
            self.h.eps_coord = functools.partial(cdf_eps, self.params)

    def metadata(self) -> dict:
        return {"iterations": self.iterations, "final_residual": self.final_residual,
                "contraction_ratio_estimate": self.contraction_ratio_estimate,
                "clamp_count": self.clamp_count, "clamp_share": self.clamp_share,
                "max_step_ratio": self.max_step_ratio,
                "monotone": self.monotone, "tol": self.tol, "law": self.law,
                "quad_order": self.operator.rule.order if self.operator else None,
                "prefs": dict(self.prefs.__dict__) if self.prefs else None,
                "params": dict(self.params.__dict__) if self.params else None}

    def op(self) -> HOperator:
        if self.operator is None:
            self.operator = HOperator(self.prefs, self.params, self.h.grid,
                                      gauss_hermite(int(self.h.meta.get("quad_order", 21))),
                                      self.law)
        return self.operator


def t_operator(prefs: PreferenceParams, params: ProcessParams, h: GridFunction,
               rule: QuadratureRule | None = None, law: str = DEFAULT_LAW) -> GridFunction:
    """One application of T to a grid function."""
    op = HOperator(prefs, params, h.grid, rule, law)
    h.clamp_count += op.clamp_count
    return h.with_values(op.apply(h.values))


def _widen(grid: Grid2D, params: ProcessParams) -> Grid2D:
    sd = stationary_log_y(params).sd
    ly = grid.logy_axis
    return Grid2D(grid.eps_axis, np.linspace(max(ly[0] - sd, 0.0), ly[-1] + sd, ly.size))


def solve_h(prefs: PreferenceParams, params: ProcessParams, grid: Grid2D | None = None,
            tol: float = 1e-10, max_iter: int = 10_000, rule: QuadratureRule | None = None,
            law: str = DEFAULT_LAW, widen: bool = True) -> HSolution:
    """Fixed point of T from the zero function."""
    growth_constant(prefs, params)
    grid = grid or default_grid(params, *DEFAULT_GRID)
    rule = rule or gauss_hermite(21)
    op = HOperator(prefs, params, grid, rule, law)
    tries = 0
    while widen and op.clamp_share > CLAMP_SHARE_LIMIT and tries < 2:
        grid = _widen(grid, params)
        op = HOperator(prefs, params, grid, rule, law)
        tries += 1

    min_step = [np.inf]
    first_values = []

    def track(it, v, nv):
        min_step[0] = min(min_step[0], float(np.min(nv - v)))
        first_values.append(float(np.min(v)))

    try:
        res = fixed_point(op.apply, np.zeros(grid.shape), tol, max_iter, callback=track)
    except NonConvergenceError as e:
        raise NonConvergenceError("h iteration did not converge", e.last_residual, e.history) from None
    hist = res.residuals
    ratios = res.contraction_ratios
    # ratios are dominated by rounding once residuals approach machine precision
    usable = ratios[np.asarray(hist[1:]) > 1e3 * np.finfo(float).eps * max(1.0, np.max(res.value))]
    # from the zero function the first steps can expand (T is only a contraction
    # above the lower bound), so the modulus is read off the tail of the history
    est = float(np.median(usable[usable.size // 2:])) if usable.size else float("nan")
    max_ratio = float(np.max(usable)) if usable.size else float("nan")
    meta = {"quad_order": rule.order, "law": law, "tol": tol, "iterations": res.iterations,
            "final_residual": hist[-1], "widened": tries, "max_step_ratio": max_ratio}
    meta["eps_coord"] = "cdf"
    gf = GridFunction(grid, res.value, meta, op.clamp_count * res.iterations)
    return HSolution(gf, res.iterations, hist[-1], est, op.clamp_count * res.iterations,
                     op.clamp_share, hist, bool(min_step[0] >= -1e-12), tol,
                     prefs, params, law, op, max_ratio, first_values)


def _check_solution(sol: HSolution, prefs: PreferenceParams, params: ProcessParams):
    if not sol.final_residual < sol.tol:
        raise PricingError(f"solution residual {sol.final_residual:.3e} exceeds tolerance {sol.tol:.1e}")
    if sol.prefs is not None and sol.prefs != prefs:
        raise PricingError("solution was computed for different preference parameters")
    if sol.params is not None and sol.params != params:
        raise PricingError("solution was computed for different process parameters")


def h_at(sol: HSolution, eps, logy):
    """h at arbitrary states via one application of T to the stored surface."""
    return sol.op().evaluate(sol.h.values, eps, logy)[0]


def prices1_arrays(sol: HSolution, eps, logy):
    """(R_f, S/D, E_t[R_S]) at arrays of states."""
    op = sol.op()
    h, rf, ers = op.evaluate(sol.h.values, eps, logy)
    L = weight_contemp(sol.prefs, cdf_eps(sol.params, np.atleast_1d(eps)))
    return rf, h / (L * op.K), ers


def price1(prefs: PreferenceParams, params: ProcessParams, solution: HSolution,
           state: MarketState) -> EquilibriumPrices:
    _check_solution(solution, prefs, params)
    rf, pd, ers = prices1_arrays(solution, [state.eps_c], [state.log_y])
    return EquilibriumPrices(float(rf[0]), float(pd[0]), float(ers[0]), float(ers[0] - rf[0]))


def sdf1(prefs: PreferenceParams, params: ProcessParams, solution: HSolution,
         eps_now, eps_next, logy_next):
    """Stochastic discount factor.

    M = (beta / Lambda_t) eps'^-theta Lambda' (1 + gamma Gamma_t Y' / (Y' Lambda' K + h')).
    """
    K = growth_constant(prefs, params)
    Ft = cdf_eps(params, eps_now)
    Lt, Gt = weight_contemp(prefs, Ft), weight_prosp(prefs, Ft)
    Ln = weight_contemp(prefs, cdf_eps(params, eps_next))
    Yn = np.exp(logy_next)
    hn = interp(solution.h, eps_next, logy_next)
    return prefs.beta * eps_next ** -prefs.theta * Ln / Lt \
        * (1 + prefs.gamma * Gt * Yn / (Yn * Ln * K + hn))


def _next_state_arrays(sol: HSolution, logy):
    op = sol.op()
    lyn = next_log_y(sol.params, logy, op.rule.nodes, sol.law)
    E, LY = np.meshgrid(op.ep, lyn, indexing="ij")
    return op, E, LY


def euler_residuals(prefs: PreferenceParams, params: ProcessParams, solution: HSolution,
                    state: MarketState, h_now: float | None = None):
    """Residuals of the stock and bond Euler equations at a state.

    Each equation reads 1 = beta E_t[eps'^-theta (Lambda'/Lambda_t) R]
                            + (gamma beta / K) (Gamma_t/Lambda_t) E_t[eps'^-theta Y'/(S'/D' + Y') R].
    h_now overrides the current-state h (used for sensitivity checks).
    """
    op, E, LY = _next_state_arrays(solution, state.log_y)
    K, b, g, th = op.K, prefs.beta, prefs.gamma, prefs.theta
    Ft = cdf_eps(params, state.eps_c)
    Lt, Gt = weight_contemp(prefs, Ft), weight_prosp(prefs, Ft)
    if h_now is None:
        h_now = float(h_at(solution, [state.eps_c], [state.log_y])[0])
    pd_now = h_now / (Lt * K)
    Ln = weight_contemp(prefs, cdf_eps(params, E))
    hn = interp(solution.h, E, LY)
    pd_next = hn / (Ln * K)
    Yn = np.exp(LY)
    rs = (pd_next + 1) / pd_now * E * state.y / Yn
    rf = float(prices1_arrays(solution, [state.eps_c], [state.log_y])[0][0])
    w = op.w

    def ex(a):
        return float(w @ a @ w)

    std = b * E ** -th * Ln / Lt
    pro = g * b / K * Gt / Lt * E ** -th * Yn / (pd_next + Yn)
    res_stock = abs(1 - ex(std * rs) - ex(pro * rs))
    res_bond = abs(1 - ex(std) * rf - ex(pro) * rf)
    return res_stock, res_bond


def sdf_residuals1(prefs, params, solution: HSolution, state: MarketState):
    """(|E_t[M R_S] - 1|, |E_t[M] R_f - 1|) using the discount factor directly."""
    op, E, LY = _next_state_arrays(solution, state.log_y)
    M = sdf1(prefs, params, solution, state.eps_c, E, LY)
    Ln = weight_contemp(prefs, cdf_eps(params, E))
    hn = interp(solution.h, E, LY)
    pd_now = float(prices1_arrays(solution, [state.eps_c], [state.log_y])[1][0])
    rf = float(prices1_arrays(solution, [state.eps_c], [state.log_y])[0][0])
    rs = (hn / (Ln * op.K) + 1) / pd_now * E * state.y / np.exp(LY)
    w = op.w
    return abs(float(w @ (M * rs) @ w) - 1), abs(float(w @ M @ w) * rf - 1)


def cw_ratio1(prefs: PreferenceParams, params: ProcessParams, solution: HSolution,
              state: MarketState) -> float:
    """Consumption-wealth ratio.

    C/W = 1 / (1 + beta E_t[eps'^(1-theta) Lambda'/Lambda_t]
                 + beta E_t[eps'^(1-theta) h(eps', Y') / (Y' Lambda_t K)]).
    """
    _check_solution(solution, prefs, params)
    op, E, LY = _next_state_arrays(solution, state.log_y)
    Lt = weight_contemp(prefs, cdf_eps(params, state.eps_c))
    hn = interp(solution.h, E, LY)
    w, b = op.w, prefs.beta
    t2 = float(w @ (E ** (1 - prefs.theta) * hn / np.exp(LY)) @ w)
    return 1.0 / (1.0 + b * op.B / Lt + b * t2 / (Lt * op.K))


def cw_ratio1_typeset(prefs: PreferenceParams, params: ProcessParams, solution: HSolution,
                      state: MarketState) -> float:
    """Variant with h read two periods ahead and 1 - beta E[eps^-theta] in the denominator.

    Kept only to quantify how far this reading is from cw_ratio1.
    """
    op, E, LY = _next_state_arrays(solution, state.log_y)
    Lt = weight_contemp(prefs, cdf_eps(params, state.eps_c))
    w, b, th = op.w, prefs.beta, prefs.theta
    lyn = LY[0]
    # E_{t+1}[h(eps'', Y'')] depends on Y' only
    ly2 = next_log_y(params, lyn[:, None], op.rule.nodes[None, :], solution.law)
    E2 = np.broadcast_to(op.ep[:, None, None], (op.ep.size,) + ly2.shape)
    h2 = interp(solution.h, E2, np.broadcast_to(ly2[None], E2.shape))
    hbar = np.einsum("i,ikm,m->k", w, h2, w)
    denom = 1 - b * lognormal_moment(params, -th)
    t2 = float(w @ (E ** (1 - th) * hbar[None, :] / np.exp(LY)) @ w)
    return 1.0 / (1.0 + b * op.B / Lt + b * t2 / (Lt * denom))


@dataclass(frozen=True)
class LowerBound:
    value: float | None
    status: str         # "ok", "degenerate" (gamma = 0) or "unbracketed"
    residual: float | None = None


def lower_bound_equation(prefs, params, logy, hbar, rule=None, law=DEFAULT_LAW):
    """Left-hand side minus one of the implicit equation defining the contraction bound."""
    rule = rule or gauss_hermite(21)
    K = growth_constant(prefs, params)
    e = eps_nodes(rule, params)[:, None]
    Lp = weight_contemp(prefs, cdf_eps(params, e))
    lyn = next_log_y(params, logy, rule.nodes, law)[None, :]
    base = prefs.beta * e ** (1 - prefs.theta) * np.exp(logy - lyn)
    inner = base * prefs.gamma * prefs.lam * Lp * K / (Lp * K + hbar) ** 2 + base
    return float(rule.weights @ inner ** 2 @ rule.weights) - 1.0


def h_lower_bound(prefs: PreferenceParams, params: ProcessParams, state: MarketState,
                  rule: QuadratureRule | None = None, law: str = DEFAULT_LAW,
                  h_max: float = 1e6) -> LowerBound:
    """Smallest h above which T is provably a contraction at this state (diagnostic)."""
    ly = state.log_y
    if prefs.gamma == 0:
        return LowerBound(None, "degenerate", lower_bound_equation(prefs, params, ly, 0.0, rule, law))

    def f(x):
        return lower_bound_equation(prefs, params, ly, x, rule, law)

    try:
        root = bisect(f, 0.0, h_max, tol=1e-13)
    except BracketError:
        return LowerBound(None, "unbracketed", None)
    return LowerBound(root, "ok", f(root))
