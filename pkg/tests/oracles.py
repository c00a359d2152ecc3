"""Independent reference computations used to freeze expected values.

Nothing here calls into the package's numerics: integrals are done with mpmath
adaptive quadrature at 30 digits, series are summed directly, and the AR(1)
likelihood is maximized numerically.
"""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy import optimize

mp.mp.dps = 30


def mp_lognormal_moment(mu, s, a):
    mu, s, a = mp.mpf(mu), mp.mpf(s), mp.mpf(a)
    return mp.e ** (a * mu + a * a * s * s / 2)


def mp_normal_cdf(z):
    return (1 + mp.erf(mp.mpf(z) / mp.sqrt(2))) / 2


def mp_eps_expect(f, mu=0.058, s=0.053):
    """E[f(eps)] for log eps ~ N(mu, s^2) by adaptive quadrature over z."""
    mu, s = mp.mpf(mu), mp.mpf(s)
    g = lambda z: f(mp.e ** (mu + s * z)) * mp.e ** (-z * z / 2) / mp.sqrt(2 * mp.pi)
    return mp.quad(g, [-mp.inf, -3, 0, 3, mp.inf])


def mp_weight(F, b, lam):
    return 1 + b * F + b * lam * (1 - F)


def mp_cdf_eps(x, mu=0.058, s=0.053):
    return mp_normal_cdf((mp.log(x) - mu) / s)


def model2_prices(eps_now, y_now, beta=0.98, theta=4, b=1, lam=2,
                  mu=0.058, s=0.053, phi=0.961, kappa=2.816, sy=0.099, law="iid_ratio"):
    """R_f, S/D and conditional risk premium of the contemporaneous-only model."""
    beta, theta = mp.mpf(beta), mp.mpf(theta)
    W = lambda e: mp_weight(mp_cdf_eps(e, mu, s), b, lam)
    A = mp_eps_expect(lambda e: e ** -theta * W(e), mu, s)
    B = mp_eps_expect(lambda e: e ** (1 - theta) * W(e), mu, s)
    Cinv = mp_eps_expect(lambda e: e / W(e), mu, s)
    g = mp_lognormal_moment(mu, s, 1 - theta)
    m1 = mp_lognormal_moment(mu, s, 1)
    if law == "ar1":
        q = mp.e ** ((1 - mp.mpf(phi)) * (mp.log(y_now) - kappa) + mp.mpf(sy) ** 2 / 2)
    else:
        v = 2 * (1 - mp.mpf(phi)) * mp.mpf(sy) ** 2 / (1 - mp.mpf(phi) ** 2)
        q = mp.e ** (v / 2)
    Lt = W(mp.mpf(eps_now))
    rf = Lt / (beta * A)
    pd = beta * B * q / (Lt * (1 - beta * g * q))
    # E_t[R_S] = Lt (E[eps/Lambda'] q + E[eps] q (1 - beta g q)/(beta B q))
    ers = Lt * (Cinv * q + m1 * q * (1 - beta * g * q) / (beta * B * q))
    return float(rf), float(pd), float(ers - rf)


def h_gamma0_ar1(logy, beta=0.98, theta=4, b=1, lam=2, mu=0.058, s=0.053,
                 phi=0.961, kappa=2.816, sy=0.099, terms=4000):
    """h(Y) for gamma = 0 under the AR(1) law as the discounted sum

        h = K c1 sum_{k>=1} beta^k g^(k-1) E_t[Y_t / Y_{t+k}]

    with c1 = E[eps^(1-theta) Lambda], K = 1 - beta g, and the exact k-step
    lognormal moment of the AR(1).
    """
    g = float(mp_lognormal_moment(mu, s, 1 - theta))
    c1 = float(mp_eps_expect(lambda e: e ** (1 - theta) * mp_weight(mp_cdf_eps(e, mu, s), b, lam), mu, s))
    K = 1 - beta * g
    k = np.arange(1, terms + 1)
    ey = np.exp((1 - phi ** k) * (logy - kappa) + sy ** 2 * (1 - phi ** (2 * k)) / (2 * (1 - phi ** 2)))
    return K * c1 * float(np.sum(beta ** k * g ** (k - 1) * ey))


def ar1_mle_numeric(log_y):
    """Conditional Gaussian AR(1) MLE by direct maximization."""
    x, y = log_y[:-1], log_y[1:]

    def nll(th):
        a, phi, ls = th
        r = y - a - phi * x
        s2 = math.exp(2 * ls)
        return 0.5 * np.sum(r * r) / s2 + r.size * ls

    th0 = np.array([0.1, 0.9, math.log(np.std(np.diff(log_y)))])
    res = optimize.minimize(nll, th0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000})
    a, phi, ls = res.x
    return phi, a / (1 - phi), math.exp(ls)
