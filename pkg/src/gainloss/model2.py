"""Closed-form prices with contemporaneous gain-loss utility only (gamma = 0).

With q(Y_t) = E_t[Y_t/Y_{t+1}], A = E[eps^-theta Lambda], B = E[eps^(1-theta) Lambda]
and g = E[eps^(1-theta)]:

    R_f  = Lambda_t / (beta A)
    S/D  = beta B q / (Lambda_t (1 - beta g q))
    R_S  = Lambda_t eps_d ((1 - beta g q) / (beta B q) + 1 / Lambda')
    M    = beta eps'^-theta Lambda' / Lambda_t

The default transition law for Y is the stationary law of log(Y_{t+1}/Y_t)
("iid_ratio"), under which q is a constant and the closed forms are exact;
"ar1" plugs in the one-step conditional q instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureRule, eps_nodes, expect_joint, gauss_hermite
from .preferences import PreferenceParams, weight_contemp
from .processes import (MarketState, ProcessParams, cdf_eps, expected_y_ratio,
                        lognormal_moment)

DEFAULT_LAW = "iid_ratio"
ERP_CHECK_TOL = 1e-10


class PricingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EquilibriumPrices:
    r_f: float
    pd: float
    e_rs: float
    erp: float

    def as_dict(self):
        return {"r_f": self.r_f, "pd": self.pd, "e_rs": self.e_rs, "erp": self.erp}


@dataclass(frozen=True)
class Moments2:
    """Unconditional eps-moments shared by every Model II formula."""
    A: float        # E[eps^-theta Lambda]
    B: float        # E[eps^(1-theta) Lambda]
    g: float        # E[eps^(1-theta)]
    g0: float       # E[eps^-theta]
    c_inv: float    # E[eps / Lambda]
    m1: float       # E[eps]


def lam_of(prefs: PreferenceParams, params: ProcessParams, eps):
    return weight_contemp(prefs, cdf_eps(params, eps))


def moments2(prefs: PreferenceParams, params: ProcessParams,
             rule: QuadratureRule | None = None) -> Moments2:
    rule = rule or gauss_hermite(21)
    e = eps_nodes(rule, params)
    L = lam_of(prefs, params, e)
    w = rule.weights
    th = prefs.theta
    return Moments2(A=float(w @ (e ** -th * L)), B=float(w @ (e ** (1 - th) * L)),
                    g=lognormal_moment(params, 1 - th), g0=lognormal_moment(params, -th),
                    c_inv=float(w @ (e / L)), m1=lognormal_moment(params, 1.0))


def growth_condition2(prefs: PreferenceParams, params: ProcessParams, logy_now,
                      law: str = DEFAULT_LAW):
    """beta E_t[eps^-theta eps_d]; prices are finite only when this is below one."""
    return prefs.beta * lognormal_moment(params, 1 - prefs.theta) \
        * expected_y_ratio(params, logy_now, law)


def _check_growth(prefs, params, logy, law):
    gc = np.asarray(growth_condition2(prefs, params, logy, law))
    if np.any(gc >= 1):
        bad = float(np.max(gc))
        raise PricingError(f"growth condition violated: beta E_t[eps^-theta eps_d] = {bad:.6g} >= 1")


def rf2(prefs, params, eps, mom: Moments2 | None = None):
    mom = mom or moments2(prefs, params)
    return lam_of(prefs, params, eps) / (prefs.beta * mom.A)


def pd2(prefs, params, eps, logy, law: str = DEFAULT_LAW, mom: Moments2 | None = None):
    mom = mom or moments2(prefs, params)
    _check_growth(prefs, params, logy, law)
    q = expected_y_ratio(params, logy, law)
    return prefs.beta * mom.B * q / (lam_of(prefs, params, eps) * (1 - prefs.beta * mom.g * q))


def stock_return2(prefs, params, eps_now, logy_now, eps_next, logy_next,
                  law: str = DEFAULT_LAW, mom: Moments2 | None = None):
    """Stock return in the closed form of the contemporaneous-only model."""
    mom = mom or moments2(prefs, params)
    q = expected_y_ratio(params, logy_now, law)
    Lt = lam_of(prefs, params, eps_now)
    Ln = lam_of(prefs, params, eps_next)
    ed = eps_next * np.exp(logy_now - logy_next)
    b = prefs.beta
    return Lt * ed * ((1 - b * mom.g * q) / (b * mom.B * q) + 1 / Ln)


def erp_formula2(prefs, params, state: MarketState, law: str = DEFAULT_LAW,
                 mom: Moments2 | None = None) -> float:
    """Conditional risk premium written directly in terms of moments."""
    mom = mom or moments2(prefs, params)
    q = float(expected_y_ratio(params, state.log_y, law))
    Lt = lam_of(prefs, params, state.eps_c)
    b = prefs.beta
    e_d_over_L = mom.c_inv * q
    e_d = mom.m1 * q
    return Lt * (e_d_over_L + e_d * (1 - b * mom.g * q) / (b * mom.B * q) - 1 / (b * mom.A))


def price2(prefs: PreferenceParams, params: ProcessParams, state: MarketState,
           rule: QuadratureRule | None = None, law: str = DEFAULT_LAW,
           check_erp: bool = True) -> EquilibriumPrices:
    rule = rule or gauss_hermite(21)
    mom = moments2(prefs, params, rule)
    ly = state.log_y
    _check_growth(prefs, params, ly, law)
    rf = float(rf2(prefs, params, state.eps_c, mom))
    pd = float(pd2(prefs, params, state.eps_c, ly, law, mom))
    e_rs = expect_joint(rule, lambda e, lyn: stock_return2(
        prefs, params, state.eps_c, ly, e, lyn, law, mom), params, ly, law)
    erp = e_rs - rf
    if check_erp:
        alt = erp_formula2(prefs, params, state, law, mom)
        if abs(alt - erp) > ERP_CHECK_TOL * max(1.0, abs(erp)):
            raise PricingError(f"risk premium mismatch: quadrature {erp!r} vs formula {alt!r}")
    return EquilibriumPrices(rf, pd, e_rs, erp)


def sdf2(prefs: PreferenceParams, params: ProcessParams, eps_now, eps_next):
    if np.any(np.asarray(eps_now) <= 0) or np.any(np.asarray(eps_next) <= 0):
        from .processes import DomainError
        raise DomainError("sdf2 needs positive consumption growth")
    return prefs.beta * eps_next ** -prefs.theta * lam_of(prefs, params, eps_next) \
        / lam_of(prefs, params, eps_now)


def euler_residuals2(prefs, params, state: MarketState, rule: QuadratureRule | None = None,
                     law: str = DEFAULT_LAW):
    """(|E_t[M R_S] - 1|, |E_t[M] R_f - 1|)."""
    rule = rule or gauss_hermite(21)
    mom = moments2(prefs, params, rule)
    ly = state.log_y
    m_rs = expect_joint(rule, lambda e, lyn: sdf2(prefs, params, state.eps_c, e)
                        * stock_return2(prefs, params, state.eps_c, ly, e, lyn, law, mom),
                        params, ly, law)
    rf = float(rf2(prefs, params, state.eps_c, mom))
    m = expect_joint(rule, lambda e, lyn: sdf2(prefs, params, state.eps_c, e), params, ly, law)
    return abs(m_rs - 1.0), abs(m * rf - 1.0)


def cw_ratio2(prefs: PreferenceParams, params: ProcessParams, state: MarketState,
              rule: QuadratureRule | None = None, law: str = DEFAULT_LAW) -> float:
    """Consumption-wealth ratio.

    C/W = 1 / (1 + beta E_t[eps'^(1-theta) Lambda'/Lambda_t]
                 + beta E_t[eps'^(1-theta) Lambda' (S/D)' / (Lambda_t Y')])
    where Lambda' (S/D)' = beta B q' / (1 - beta g q') depends on Y' only.
    """
    rule = rule or gauss_hermite(21)
    mom = moments2(prefs, params, rule)
    b, th = prefs.beta, prefs.theta
    Lt = lam_of(prefs, params, state.eps_c)

    def second(e, lyn):
        q1 = expected_y_ratio(params, lyn, law)
        gc = b * mom.g * q1
        if np.any(gc >= 1):
            raise PricingError(f"growth condition violated at a next-period state: {np.max(gc):.6g}")
        return e ** (1 - th) * np.exp(-lyn) * b * mom.B * q1 / (1 - gc)

    t2 = expect_joint(rule, second, params, state.log_y, law)
    return 1.0 / (1.0 + b * mom.B / Lt + b * t2 / Lt)


def statics_thresholds(prefs: PreferenceParams, params: ProcessParams, logy_now=None,
                       rule: QuadratureRule | None = None):
    """Cut-offs on F(eps_t) that sign the response of R_f and S/D to lambda and b.

    R_f falls with lambda and b when F(eps_t) exceeds the first value; S/D rises
    when F(eps_t) exceeds the second. The Y_t-dependence of the second cancels.
    """
    rule = rule or gauss_hermite(41)
    e = eps_nodes(rule, params)
    F = cdf_eps(params, e)
    w, th = rule.weights, prefs.theta
    a0, a1 = w @ e ** -th, w @ (e ** -th * F)
    d0, d1 = w @ e ** (1 - th), w @ (e ** (1 - th) * F)
    return float(a1 / a0), float(d1 / d0)
