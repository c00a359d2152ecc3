"""Quadrature, grid functions, fixed-point iteration and root bracketing."""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy import optimize

from .processes import ProcessParams, next_log_y, stationary_log_y


class NumericalError(ArithmeticError):
    def __init__(self, msg, node=None):
        super().__init__(msg if node is None else f"{msg} at node {node}")
        self.node = node


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, last_residual, history):
        super().__init__(f"{msg} (last residual {last_residual:.3e})")
        self.last_residual = last_residual
        self.history = history


class BracketError(ValueError):
    pass


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for E[g(Z)], Z ~ N(0,1)."""
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def raw_weights(self) -> np.ndarray:
        # physicists' convention: integral of g(x) exp(-x^2) dx
        return self.weights * math.sqrt(math.pi)

    @property
    def raw_nodes(self) -> np.ndarray:
        return self.nodes / math.sqrt(2.0)

    def expect(self, values) -> float:
        return float(self.weights @ values)


def _orthonormal_hermite(x, n):
    """Orthonormal probabilists' Hermite values p_0..p_n at x (shape (n+1, len(x)))."""
    p = np.empty((n + 1, x.size))
    p[0] = 1.0
    if n >= 1:
        p[1] = x
    for k in range(1, n):
        p[k + 1] = (x * p[k] - math.sqrt(k) * p[k - 1]) / math.sqrt(k + 1)
    return p


@functools.lru_cache(maxsize=32)
def gauss_hermite(order: int) -> QuadratureRule:
    """Golub-Welsch rule for the standard normal weight.

    Nodes are eigenvalues of the Jacobi matrix of the probabilists' Hermite
    polynomials (zero diagonal, off-diagonal sqrt(k)), polished by one Newton
    step. Weights come from the Christoffel function 1 / sum_k p_k(x)^2, which
    keeps full relative accuracy in the tails where eigenvector entries do not.
    """
    order = int(order)
    if not 1 <= order <= 200:
        raise ValueError(f"quadrature order must be in [1, 200], got {order}")
    if order == 1:
        x, w = np.zeros(1), np.ones(1)
    else:
        off = np.sqrt(np.arange(1, order, dtype=float))
        x = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
        p = _orthonormal_hermite(x, order)
        x = x - p[order] / (math.sqrt(order) * p[order - 1])
        p = _orthonormal_hermite(x, order - 1)
        w = 1.0 / np.sum(p * p, axis=0)
        # enforce exact symmetry
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
        w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, order)


def eps_nodes(rule: QuadratureRule, params: ProcessParams) -> np.ndarray:
    return np.exp(params.mu_c + params.sigma_c * rule.nodes)


def _check_finite(vals, where):
    vals = np.asarray(vals, dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = np.unravel_index(np.flatnonzero(bad)[0], bad.shape)
        raise NumericalError("non-finite integrand", where(i))
    return vals


def expect_eps(rule: QuadratureRule, f, params: ProcessParams) -> float:
    """E[f(eps_c)] with eps_c lognormal."""
    x = eps_nodes(rule, params)
    vals = _check_finite(np.broadcast_to(f(x), x.shape), lambda i: float(x[i]))
    return float(rule.weights @ vals)


def expect_joint(rule: QuadratureRule, f, params: ProcessParams, logy_now: float,
                 law: str = "ar1") -> float:
    """E_t[f(eps_{t+1}, log Y_{t+1})] over the two independent shocks."""
    e = eps_nodes(rule, params)[:, None]
    ly = next_log_y(params, logy_now, rule.nodes, law)[None, :]
    vals = np.broadcast_to(f(e, ly), (e.size, ly.size))
    vals = _check_finite(vals, lambda i: (float(e[i[0], 0]), float(ly[0, i[1]])))
    return float(rule.weights @ vals @ rule.weights)


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class Grid2D:
    eps_axis: np.ndarray
    logy_axis: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.eps_axis, dtype=float)
        ly = np.asarray(self.logy_axis, dtype=float)
        if e.ndim != 1 or ly.ndim != 1 or e.size < 2 or ly.size < 2:
            raise ValueError("axes must be 1-D with at least two nodes")
        if np.any(np.diff(e) <= 0) or np.any(np.diff(ly) <= 0):
            raise ValueError("axes must be strictly ascending")
        if e[0] <= 0:
            raise ValueError("eps axis must be positive")
        if ly[0] < 0:
            raise ValueError("log Y axis must be >= 0 (Y >= 1)")
        object.__setattr__(self, "eps_axis", e)
        object.__setattr__(self, "logy_axis", ly)

    @property
    def shape(self):
        return (self.eps_axis.size, self.logy_axis.size)

    def refined(self) -> "Grid2D":
        """Insert a midpoint in every cell (log-midpoints on the eps axis)."""
        def mid(a, log=False):
            b = np.log(a) if log else a
            out = np.empty(2 * b.size - 1)
            out[::2] = b
            out[1::2] = 0.5 * (b[1:] + b[:-1])
            return np.exp(out) if log else out
        return Grid2D(mid(self.eps_axis, log=True), mid(self.logy_axis))


def default_grid(params: ProcessParams, ne: int = 41, ny: int = 41,
                 eps_width: float = 4.0, logy_width: float = 4.0) -> Grid2D:
    """Log-uniform eps nodes over exp(mu +- w sigma); log Y nodes over kappa +- w sigma_stat."""
    sc = max(params.sigma_c, 1e-8)
    e = np.exp(np.linspace(params.mu_c - eps_width * sc, params.mu_c + eps_width * sc, ne))
    st = stationary_log_y(params)
    sd = max(st.sd, 1e-8)
    lo = max(st.mean - logy_width * sd, 0.0)
    hi = st.mean + logy_width * sd
    if hi <= lo:
        hi = lo + 1e-6
    return Grid2D(e, np.linspace(lo, hi, ny))


def linear_weights(axis: np.ndarray, x):
    """Bracketing index and upper weight for linear interpolation with clamping.

    Returns (i, w, clamped) with value = (1-w) v[i] + w v[i+1].
    """
    x = np.asarray(x, dtype=float)
    clamped = (x < axis[0]) | (x > axis[-1])
    xc = np.clip(x, axis[0], axis[-1])
    i = np.clip(np.searchsorted(axis, xc, side="right") - 1, 0, axis.size - 2)
    w = (xc - axis[i]) / (axis[i + 1] - axis[i])
    return i, w, clamped


@dataclass
class GridFunction:
    grid: Grid2D
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    clamp_count: int = 0
    # optional increasing map of eps to the coordinate interpolated linearly
    eps_coord: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalError("grid function has non-finite values")
        self.values = v

    def __call__(self, eps, logy):
        return interp(self, eps, logy)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, dict(self.meta), eps_coord=self.eps_coord)


def interp(gf: GridFunction, eps, logy):
    """Bilinear interpolation in (eps, log Y), clamped to the grid box.

    With gf.eps_coord set, the eps direction is linear in eps_coord(eps) instead.
    """
    eps, logy = np.broadcast_arrays(np.asarray(eps, float), np.asarray(logy, float))
    if gf.eps_coord is None:
        i, wi, ci = linear_weights(gf.grid.eps_axis, eps)
    else:
        i, wi, ci = linear_weights(np.asarray(gf.eps_coord(gf.grid.eps_axis)),
                                   np.asarray(gf.eps_coord(eps)))
    j, wj, cj = linear_weights(gf.grid.logy_axis, logy)
    gf.clamp_count += int(np.count_nonzero(ci | cj))
    v = gf.values
    out = ((1 - wi) * (1 - wj) * v[i, j] + wi * (1 - wj) * v[i + 1, j]
           + (1 - wi) * wj * v[i, j + 1] + wi * wj * v[i + 1, j + 1])
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- fixed point

@dataclass
class FixedPointResult:
    value: object
    iterations: int
    residuals: list

    def __iter__(self):
        return iter((self.value, self.iterations, self.residuals))

    @property
    def contraction_ratios(self) -> np.ndarray:
        r = np.asarray(self.residuals, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return r[1:] / r[:-1]


def _vals(v):
    return v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)


def fixed_point(fmap, init, tol: float = 1e-10, max_iter: int = 10_000,
                callback=None) -> FixedPointResult:
    """Iterate v <- fmap(v) until the sup-norm step is below tol."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    v = init
    hist = []
    for it in range(1, max_iter + 1):
        nv = fmap(v)
        res = float(np.max(np.abs(_vals(nv) - _vals(v))))
        hist.append(res)
        if callback is not None:
            callback(it, v, nv)
        v = nv
        if not math.isfinite(res):
            raise NonConvergenceError("iteration diverged", res, hist)
        if res < tol:
            return FixedPointResult(v, it, hist)
    raise NonConvergenceError(f"no convergence in {max_iter} iterations", hist[-1], hist)


def bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of f in [lo, hi] to within tol."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")
    return optimize.bisect(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=2000)


# ---------------------------------------------------------------- cache files

def save_grid_function(gf: GridFunction, path) -> tuple[Path, Path]:
    """Write `<path>.csv` (eps,logy,value) and `<path>.json` (axes and metadata)."""
    path = Path(path)
    csv_path, json_path = path.with_suffix(".csv"), path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "logy", "value"])
        for a, e in enumerate(gf.grid.eps_axis):
            for b, ly in enumerate(gf.grid.logy_axis):
                w.writerow([repr(float(e)), repr(float(ly)), repr(float(gf.values[a, b]))])
    side = {"eps_axis": [float(x) for x in gf.grid.eps_axis],
            "logy_axis": [float(x) for x in gf.grid.logy_axis],
            "clamp_count": gf.clamp_count, "meta": gf.meta}
    json_path.write_text(json.dumps(side, indent=1, sort_keys=True))
    return csv_path, json_path


def load_grid_function(path) -> GridFunction:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    grid = Grid2D(np.array(side["eps_axis"]), np.array(side["logy_axis"]))
    vals = np.empty(grid.shape)
    with open(path.with_suffix(".csv"), newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    if len(rows) != vals.size:
        raise ValueError(f"cache holds {len(rows)} rows, expected {vals.size}")
    for k, (e, ly, v) in enumerate(rows):
        a, b = divmod(k, grid.shape[1])
        if float(e) != grid.eps_axis[a] or float(ly) != grid.logy_axis[b]:
            raise ValueError(f"cache row {k + 2} does not match the grid axes")
        vals[a, b] = float(v)
    return GridFunction(grid, vals, side.get("meta", {}), side.get("clamp_count", 0))
