"""Preference kernel: power utility, piecewise-linear gain-loss utility and the
two composite weights that enter every pricing formula.

    Lambda(F) = 1 + b F + b lam (1 - F)     contemporaneous weight
    Gamma(F)  = F + lam (1 - F)             prospective weight

so that Lambda = 1 + b * Gamma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .processes import DomainError, ProcessParams, lognormal_moment


@dataclass(frozen=True)
class PreferenceParams:
    beta: float = 0.98
    theta: float = 4.0
    b: float = 1.0
    lam: float = 2.0
    gamma: float = 0.1

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0,1), got {self.beta}")
        if not self.theta > 0:
            raise DomainError(f"theta must be > 0, got {self.theta}")
        if not self.b >= 0:
            raise DomainError(f"b must be >= 0, got {self.b}")
        if not self.lam >= 1:
            raise DomainError(f"lambda must be >= 1, got {self.lam}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")

    def replace(self, **kw) -> "PreferenceParams":
        d = dict(self.__dict__)
        if "lambda" in kw:
            kw["lam"] = kw.pop("lambda")
        d.update(kw)
        return PreferenceParams(**d)


def m(x, theta):
    """Power utility over consumption."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("m needs x > 0")
    out = np.log(x) if theta == 1 else x ** (1 - theta) / (1 - theta)
    return out if out.ndim else float(out)


def mu(x, lam):
    """Gain-loss utility: gains count one-for-one, losses are scaled by lam."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, x, lam * x)
    return out if out.ndim else float(out)


def _check_f(F):
    F = np.asarray(F, dtype=float)
    if np.any((F < 0) | (F > 1)):
        raise DomainError("F must lie in [0,1]")
    return F


def weight_contemp(prefs: PreferenceParams, F):
    F = _check_f(F)
    out = 1 + prefs.b * F + prefs.b * prefs.lam * (1 - F)
    return out if out.ndim else float(out)


def weight_prosp(prefs: PreferenceParams, F):
    F = _check_f(F)
    out = F + prefs.lam * (1 - F)
    return out if out.ndim else float(out)


def growth_moment(prefs: PreferenceParams, params: ProcessParams) -> float:
    """beta * E[eps^(1-theta)]; must be < 1 for Model I prices to be finite."""
    return prefs.beta * lognormal_moment(params, 1 - prefs.theta)
