"""Computable theory constants and experiment oracles.

Provides the damping constant gamma_max of the combined nudging/dissipation
quadratic form, lattice trace sums with integral tail bounds, the asymptotic
mean-square accuracy bound, Birkhoff running averages, and error/stability
metrics for filter runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .assimilation import FilterParams, RunRecord

__all__ = [
    "StabilityConstants",
    "trace_power",
    "gamma_max",
    "gamma_max_detail",
    "accuracy_bound",
    "birkhoff_average",
    "relative_error_series",
    "ensemble_stability_metrics",
]


class DivergentTraceError(ValueError):
    """The lattice trace sum diverges (exponent <= 1 with lambda = inf)."""


def _lattice_musq(kmax: int) -> np.ndarray:
    """Sorted |k|^2 values with multiplicities for 0 < max|k_i| <= kmax."""
    k = np.arange(-kmax, kmax + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    musq = (k1 * k1 + k2 * k2).ravel().astype(float)
    return musq[musq > 0]


def retained_musq(lam: float, L: float, kmax: int) -> np.ndarray:
    """Lattice eigenvalues |k|^2 with |2 pi k|^2 < lambda L^2, |k_i| <= kmax."""
    musq = _lattice_musq(kmax)
    if math.isinf(lam):
        return musq
    return musq[musq < lam * L * L / (4 * math.pi**2)]


def trace_power(
    sigma_exp: float,
    lam: float,
    L: float = 2 * math.pi,
    mode_budget: int = 200,
) -> tuple[float, float]:
    """trace_H(A^(-sigma_exp) P_lambda) = sum over retained k of |k|^(-2 sigma_exp).

    Returns (partial lattice sum, tail bound).  For lambda = inf the sum is
    truncated at |k_i| <= mode_budget and the omitted modes are bounded by
    the integral comparison 2 pi * int_K^inf r^(1 - 2 sigma) dr.
    """
    if math.isinf(lam):
        if sigma_exp <= 1:
            raise DivergentTraceError(
                f"trace exponent {sigma_exp:.3g} <= 1 with lambda = inf"
            )
        musq = _lattice_musq(mode_budget)
        # keep the full disk |k| <= K so the integral tail bound applies
        musq = musq[musq <= mode_budget**2]
        value = float(np.sum(musq ** (-sigma_exp)))
        K = float(mode_budget)
        tail = 2 * math.pi * K ** (2 - 2 * sigma_exp) / (2 * sigma_exp - 2)
        return value, tail
    kmax = int(math.ceil(math.sqrt(max(lam * L * L / (4 * math.pi**2), 1.0)))) + 1
    musq = retained_musq(lam, L, kmax)
    if musq.size == 0:
        return 0.0, 0.0
    return float(np.sum(musq ** (-sigma_exp))), 0.0


@dataclass(frozen=True)
class StabilityConstants:
    """Bound report for one filter configuration."""

    gamma_max: float
    lattice_argmin: float          # |k|^2 achieving the P_lambda branch minimum
    continuum_gamma: float         # continuum relaxation of the same minimum
    trace_value: float
    tail_bound: float
    bound: float                   # accuracy bound at the chosen gamma0
    gamma0: float

    def as_dict(self) -> dict:
        return {
            "gamma_max": self.gamma_max,
            "lattice_argmin": self.lattice_argmin,
            "continuum_gamma": self.continuum_gamma,
            "trace": self.trace_value,
            "tail_bound": self.tail_bound,
            "accuracy_bound": self.bound,
            "gamma0": self.gamma0,
        }


def _gamma_branches(p: FilterParams, delta: float, L: float) -> tuple[float, float, float, float]:
    """(P-branch min, argmin |k|^2, continuum P-branch value, Q-branch)."""
    a = p.alpha
    # continuum minimizer of g(x) = 2 w x^(-2a) + d x on x >= 1
    if p.omega == 0:
        x_star = 1.0
    elif a <= 0:
        x_star = 1.0  # g decreasing in the nudging term only for a > 0
    else:
        x_star = max(1.0, (4 * a * p.omega / delta) ** (1 / (2 * a + 1)))
    g = lambda x: 2 * p.omega * x ** (-2 * a) + delta * x
    continuum = g(x_star)

    kmax = int(math.ceil(math.sqrt(2 * x_star))) + 2
    if not math.isinf(p.lam):
        kmax = max(kmax, int(math.ceil(math.sqrt(p.lam * L * L / (4 * math.pi**2)))) + 1)
    musq = np.unique(retained_musq(p.lam, L, kmax))
    if musq.size == 0:
        p_branch, argmin = math.inf, math.nan
    else:
        vals = g(musq)
        i = int(np.argmin(vals))
        p_branch, argmin = float(vals[i]), float(musq[i])

    q_branch = math.inf if math.isinf(p.lam) else delta * p.lam * L * L / (4 * math.pi**2)
    return p_branch, argmin, continuum, q_branch


def gamma_max(p: FilterParams, delta: float, L: float = 2 * math.pi) -> float:
    """Largest gamma with gamma|h|^2/2 <= <w A^(-2a) P_lam h, h> + delta||h||^2/2.

    Computed exactly on the lattice: min over retained |k|^2 of
    2 w |k|^(-4a) + delta |k|^2, against delta*lambda*L^2/(4 pi^2) for the
    unobserved branch.  Never below delta (Poincare with lambda_1 = 1).
    """
    p_branch, _, _, q_branch = _gamma_branches(p, delta, L)
    return min(p_branch, q_branch)


def gamma_max_detail(p: FilterParams, delta: float, L: float = 2 * math.pi) -> dict:
    p_branch, argmin, continuum, q_branch = _gamma_branches(p, delta, L)
    return {
        "gamma_max": min(p_branch, q_branch),
        "lattice_argmin": argmin,
        "continuum_gamma": continuum,
        "p_branch": p_branch,
        "q_branch": q_branch,
    }


def accuracy_bound(
    p: FilterParams,
    delta: float,
    gamma0: float,
    L: float = 2 * math.pi,
    mode_budget: int = 200,
) -> float:
    """Asymptotic MSE bound (eps^2 / gamma0) * trace(A^(-4a-2b) P_lambda)."""
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    if p.sigma0 == 0:
        return 0.0
    value, tail = trace_power(4 * p.alpha + 2 * p.beta, p.lam, L, mode_budget)
    return (p.epsilon**2 / gamma0) * (value + tail)


def bound_report(
    p: FilterParams, delta: float, gamma0: float | None = None,
    L: float = 2 * math.pi, mode_budget: int = 200,
) -> StabilityConstants:
    detail = gamma_max_detail(p, delta, L)
    if gamma0 is None:
        gamma0 = detail["gamma_max"] / 2
    try:
        value, tail = trace_power(4 * p.alpha + 2 * p.beta, p.lam, L, mode_budget)
    except DivergentTraceError:
        value, tail = math.inf, math.inf
    bound = (p.epsilon**2 / gamma0) * value if math.isfinite(value) else math.inf
    return StabilityConstants(
        gamma_max=detail["gamma_max"],
        lattice_argmin=detail["lattice_argmin"],
        continuum_gamma=detail["continuum_gamma"],
        trace_value=value,
        tail_bound=tail,
        bound=bound,
        gamma0=gamma0,
    )


def birkhoff_average(series: np.ndarray) -> np.ndarray:
    """Running time average (1/n) sum_{i<=n} x_i of a uniformly sampled series."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("empty series")
    return np.cumsum(series) / np.arange(1, series.size + 1)


def relative_error_series(r: RunRecord) -> np.ndarray:
    """|m - u| / |u| per sample; NaN where |u| < 1e-14."""
    return r.relative_error()


def ensemble_stability_metrics(
    records: list[RunRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise distances |m^(k) - m^(1)| / |m^(1)| from stored snapshots.

    Returns (times, per-pair series with shape (n_times, n_members - 1),
    max-over-pairs envelope).
    """
    if len(records) < 1:
        raise ValueError("need at least one record")
    base = records[0]
    if base.states is None:
        raise ValueError("records must carry state snapshots")
    for r in records[1:]:
        if r.state_times != base.state_times:
            raise ValueError("records are not on a common snapshot grid")
        if r.manifest.get("noise_seed") != base.manifest.get("noise_seed"):
            raise ValueError("ensemble members do not share a noise realization")
    times = np.asarray(base.state_times)
    base_norm = np.array([sp.sobolev_norm(0, st) for st in base.states])
    base_norm = np.where(base_norm < 1e-14, np.nan, base_norm)
    pairs = []
    for r in records[1:]:
        d = [sp.sobolev_norm(0, a - b) for a, b in zip(r.states, base.states)]
        pairs.append(np.asarray(d) / base_norm)
    if not pairs:
        pairs = [np.zeros_like(base_norm)]
    series = np.stack(pairs, axis=1)
    envelope = np.max(series, axis=1)
    return times, series, envelope
