"""Exogenous state dynamics.

Consumption growth eps_c is i.i.d. lognormal, the consumption-dividend ratio Y
is lognormal AR(1) in logs, and dividend growth follows from the identity
eps_d = eps_c * Y_t / Y_{t+1}.

Two transition laws for log Y are supported by the pricing code:

  "ar1"        log Y_{t+1} | log Y_t  ~ N((1-phi) kappa + phi log Y_t, sigma_y^2)
  "iid_ratio"  log(Y_{t+1}/Y_t)       ~ N(0, 2(1-phi) sigma_y^2 / (1-phi^2))

The second is the stationary (unconditional) law of the log growth of Y,
which makes every conditional expectation independent of Y_t.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr

LAWS = ("ar1", "iid_ratio")


class DomainError(ValueError):
    pass


class StationarityError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessParams:
    mu_c: float = 0.058
    sigma_c: float = 0.053
    phi: float = 0.961
    kappa: float = 2.816
    sigma_y: float = 0.099

    def __post_init__(self):
        # zero volatilities are allowed so deterministic limits can be evaluated
        if self.sigma_c < 0 or self.sigma_y < 0:
            raise DomainError("sigma_c and sigma_y must be non-negative")
        if not abs(self.phi) < 1:
            raise StationarityError(f"|phi| must be < 1, got phi={self.phi}")

    def replace(self, **kw) -> "ProcessParams":
        d = dict(self.__dict__)
        d.update(kw)
        return ProcessParams(**d)


TABLE1 = ProcessParams()


@dataclass(frozen=True)
class MarketState:
    eps_c: float
    y: float

    def __post_init__(self):
        if not self.eps_c > 0:
            raise DomainError(f"eps_c must be > 0, got {self.eps_c}")
        if not self.y >= 1:
            raise DomainError(f"y must be >= 1, got {self.y}")

    @property
    def log_y(self) -> float:
        return math.log(self.y)


def make_state(eps_c: float, y: float, strict: bool = True) -> MarketState:
    """Build a MarketState; with strict=False a ratio below one is clamped to 1."""
    if not strict and y < 1:
        y = 1.0
    return MarketState(float(eps_c), float(y))


@dataclass(frozen=True)
class SamplePath:
    eps_c_series: np.ndarray
    log_y_series: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.eps_c_series) != len(self.log_y_series):
            raise ValueError("series lengths differ")

    def __eq__(self, other):
        return (isinstance(other, SamplePath) and self.seed == other.seed
                and np.array_equal(self.eps_c_series, other.eps_c_series)
                and np.array_equal(self.log_y_series, other.log_y_series))

    @property
    def y_series(self) -> np.ndarray:
        return np.exp(self.log_y_series)


def lognormal_moment(params: ProcessParams, a: float) -> float:
    """E[eps_c^a]."""
    return math.exp(a * params.mu_c + 0.5 * a * a * params.sigma_c ** 2)


def cdf_eps(params: ProcessParams, x):
    """F(x) = P(eps_c <= x). Accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("cdf_eps needs x > 0")
    # dividing by the float median first makes F(exp(mu_c)) exactly 1/2
    z = np.log(x / math.exp(params.mu_c))
    if params.sigma_c == 0:
        out = (z >= 0).astype(float)
    else:
        out = ndtr(z / params.sigma_c)
    return out if out.ndim else float(out)


def step_log_y(params: ProcessParams, log_y, shock):
    return (1 - params.phi) * params.kappa + params.phi * log_y + params.sigma_y * shock


def ratio_sd(params: ProcessParams) -> float:
    """Unconditional s.d. of log(Y_{t+1}/Y_t)."""
    return params.sigma_y * math.sqrt(2 * (1 - params.phi) / (1 - params.phi ** 2))


def next_log_y(params: ProcessParams, log_y, shock, law: str = "ar1"):
    """Next-period log Y for a standard normal shock under the chosen law."""
    if law == "ar1":
        return step_log_y(params, log_y, shock)
    if law == "iid_ratio":
        return log_y + ratio_sd(params) * shock
    raise ValueError(f"unknown law {law!r}, expected one of {LAWS}")


def expected_y_ratio(params: ProcessParams, log_y, law: str = "ar1"):
    """E_t[Y_t / Y_{t+1}] in closed form."""
    if law == "ar1":
        return np.exp((1 - params.phi) * (np.asarray(log_y) - params.kappa)
                      + 0.5 * params.sigma_y ** 2)
    if law == "iid_ratio":
        return np.exp(0.5 * ratio_sd(params) ** 2) + 0 * np.asarray(log_y)
    raise ValueError(f"unknown law {law!r}, expected one of {LAWS}")


def dividend_growth(eps_c, y_now, y_next):
    if np.any(np.asarray(eps_c) <= 0) or np.any(np.asarray(y_now) <= 0) \
            or np.any(np.asarray(y_next) <= 0):
        raise DomainError("dividend_growth needs positive inputs")
    return eps_c * y_now / y_next


@dataclass(frozen=True)
class StationaryLogY:
    mean: float
    variance: float

    def __iter__(self):
        return iter((self.mean, self.variance))

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def level_mean(self) -> float:
        return math.exp(self.mean + 0.5 * self.variance)

    @property
    def level_sd(self) -> float:
        return self.level_mean * math.sqrt(math.expm1(self.variance))


def stationary_log_y(params: ProcessParams) -> StationaryLogY:
    if not abs(params.phi) < 1:
        raise StationarityError("AR(1) is not stationary")
    return StationaryLogY(params.kappa, params.sigma_y ** 2 / (1 - params.phi ** 2))


def log_y_ratio_dists(params: ProcessParams, log_y_ratio_prev: float):
    """(conditional mean, conditional variance, unconditional variance) of log(Y_{t+1}/Y_t)."""
    if not abs(params.phi) < 1:
        raise StationarityError("AR(1) is not stationary")
    s2 = params.sigma_y ** 2
    return (params.phi * log_y_ratio_prev, 2 * s2,
            2 * (1 - params.phi) * s2 / (1 - params.phi ** 2))


def eps_moments(params: ProcessParams):
    """Mean and s.d. of eps_c."""
    m = lognormal_moment(params, 1.0)
    return m, m * math.sqrt(math.expm1(params.sigma_c ** 2))


# ---------------------------------------------------------------- sampling

def path_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for path `index` of a seeded panel."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_path(params: ProcessParams, n: int, seed: int, init: float | None = None,
                index: int = 0) -> SamplePath:
    """Draw n periods of (eps_c, log Y) under the AR(1) law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = path_rng(seed, index)
    st = stationary_log_y(params)
    z0 = rng.standard_normal()
    ly0 = st.mean + st.sd * z0 if init is None else float(init)
    ze = rng.standard_normal(n)
    zy = rng.standard_normal(n)
    eps = np.exp(params.mu_c + params.sigma_c * ze)
    # log Y_t = a + phi log Y_{t-1} + sigma_y z_t as a first-order linear filter
    drive = (1 - params.phi) * params.kappa + params.sigma_y * zy
    drive[0] = ly0
    ly = lfilter([1.0], [1.0, -params.phi], drive)
    return SamplePath(eps, ly, int(seed))


# ---------------------------------------------------------------- calibration

@dataclass(frozen=True)
class Calibration:
    params: ProcessParams | None
    mu_c: float
    sigma_c: float
    phi: float
    kappa: float
    sigma_y: float
    se: dict
    n_obs: int
    flags: tuple = field(default_factory=tuple)

    def report(self) -> dict:
        out = {k: getattr(self, k) for k in ("mu_c", "sigma_c", "phi", "kappa", "sigma_y")}
        out["se"] = dict(self.se)
        out["n_obs"] = self.n_obs
        if self.flags:
            out["flags"] = list(self.flags)
        if self.params is not None:
            m, s = eps_moments(self.params)
            st = stationary_log_y(self.params)
            out["moments"] = {"eps_mean": m, "eps_sd": s,
                              "y_mean": st.level_mean, "y_sd": st.level_sd}
        return out


def mle_from_states(log_eps, log_y) -> Calibration:
    """Gaussian MLE of (mu_c, sigma_c) and of the AR(1), conditional on the first log Y."""
    le = np.asarray(log_eps, dtype=float)
    ly = np.asarray(log_y, dtype=float)
    n = le.size
    mu = le.mean()
    sig = math.sqrt(np.mean((le - mu) ** 2))

    flags = []
    x, yv = ly[:-1], ly[1:]
    m = yv.size
    xc = x - x.mean()
    sxx = float(xc @ xc)
    # relative floor: log Y constant up to rounding
    if sxx <= 1e-24 * m * max(1.0, float(x.mean()) ** 2):
        # no variation in log Y: persistence is not identified
        phi, icpt = float("nan"), float(yv.mean())
        kappa, sy = float(x.mean()), 0.0
        flags.append("phi_ill_posed")
        se = {"mu_c": sig / math.sqrt(n), "sigma_c": sig / math.sqrt(2 * n),
              "phi": float("nan"), "kappa": float("nan"), "sigma_y": 0.0}
        return Calibration(None, mu, sig, phi, kappa, sy, se, n, tuple(flags))
    phi = float(xc @ (yv - yv.mean())) / sxx
    icpt = float(yv.mean() - phi * x.mean())
    resid = yv - icpt - phi * x
    sy = math.sqrt(np.mean(resid ** 2))
    # asymptotic covariance of (intercept, phi)
    s2 = sy * sy
    var_phi = s2 / sxx
    var_icpt = s2 * (1.0 / m + x.mean() ** 2 / sxx)
    cov = -s2 * x.mean() / sxx
    params = None
    if abs(phi) >= 1:
        flags.append("nonstationary_phi")
        warnings.warn(f"estimated phi={phi:.4f} is not stationary")
        kappa = float("nan")
        se_k = float("nan")
    else:
        kappa = icpt / (1 - phi)
        g = np.array([1 / (1 - phi), icpt / (1 - phi) ** 2])
        V = np.array([[var_icpt, cov], [cov, var_phi]])
        se_k = math.sqrt(float(g @ V @ g))
        if sig > 0 and sy > 0:
            params = ProcessParams(mu, sig, phi, kappa, sy)
    se = {"mu_c": sig / math.sqrt(n), "sigma_c": sig / math.sqrt(2 * n),
          "phi": math.sqrt(var_phi), "kappa": se_k, "sigma_y": sy / math.sqrt(2 * m)}
    return Calibration(params, mu, sig, phi, kappa, sy, se, n, tuple(flags))


def mle_calibrate(consumption, dividends) -> Calibration:
    """Calibrate from consumption and dividend levels."""
    c = np.asarray(consumption, dtype=float)
    d = np.asarray(dividends, dtype=float)
    if c.shape != d.shape or c.ndim != 1:
        raise DataError("consumption and dividends must be equal-length 1-D series")
    if c.size < 3:
        raise DataError("need at least 3 observations")
    bad = np.flatnonzero((c <= 0) | (d <= 0) | ~np.isfinite(c) | ~np.isfinite(d))
    if bad.size:
        raise DataError(f"non-positive or non-finite entry at row {int(bad[0])}")
    log_eps = np.diff(np.log(c))
    log_y = np.log(c) - np.log(d)
    # align: eps_t for t>=1, Y_t for t>=1 (the first Y conditions the AR(1))
    return mle_from_states(log_eps, log_y)


def read_series_csv(path):
    """Read `year,consumption,dividends`; returns (years, consumption, dividends)."""
    years, cons, divs = [], [], []
    with open(path, newline="") as fh:
        rdr = csv.reader(fh)
        header = next(rdr, None)
        if header is None or [h.strip() for h in header] != ["year", "consumption", "dividends"]:
            raise DataError("expected header 'year,consumption,dividends'")
        for lineno, row in enumerate(rdr, start=2):
            if not row or all(not r.strip() for r in row):
                continue
            if len(row) != 3:
                raise DataError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                yr, cv, dv = int(row[0]), float(row[1]), float(row[2])
            except ValueError as e:
                raise DataError(f"line {lineno}: {e}") from None
            if years and yr == years[-1]:
                raise DataError(f"duplicate year {yr} (line {lineno})")
            if years and yr < years[-1]:
                raise DataError(f"year {yr} out of order (line {lineno})")
            if years and yr != years[-1] + 1:
                raise DataError(f"gap before year {yr} (line {lineno})")
            if not (cv > 0 and dv > 0):
                raise DataError(f"non-positive value in year {yr} (line {lineno})")
            years.append(yr)
            cons.append(cv)
            divs.append(dv)
    if len(years) < 3:
        raise DataError("need at least 3 rows")
    return np.array(years), np.array(cons), np.array(divs)


def levels_from_path(path: SamplePath, c0: float = 1.0):
    """Consumption and dividend levels implied by a sampled path.

    eps_c_series[0] is treated as the growth into period 0 and is not used.
    """
    logc = math.log(c0) + np.concatenate([[0.0], np.cumsum(np.log(path.eps_c_series[1:]))])
    c = np.exp(logc)
    return c, c / np.exp(path.log_y_series)
