"""Continuous-time 3DVAR filter for the Navier-Stokes signal.

The estimator solves the SPDE

    dm + [delta*A*m + B(m,m) + omega*A^(-2a)*P_lam*(m - u)] dt
        = f dt + omega*sigma0*A^(-2a-b)*P_lam dW

via a split-step scheme: one deterministic Navier-Stokes step followed by
an Euler-Maruyama (optionally exact) step of the mean-reverting
Ornstein-Uhlenbeck part.  The stationary stochastic convolution Z_phi
(dZ + (delta*A + phi)Z dt = noise) is available for pullback diagnostics.

All randomness is counter-based (Philox): a NoiseStream is keyed by
(seed, role) and the per-step draw is indexed by the integer step number,
so ensembles can replay one Brownian realization exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import spectral as sp
from .dynamics import DivergedStepError, NseParams, nse_step
from .spectral import SpectralField

__all__ = [
    "FilterParams",
    "NoiseStream",
    "OuState",
    "RunRecord",
    "noise_increment",
    "ou_substep",
    "filter_step",
    "run_filter",
    "stationary_Z_sample",
    "evolve_Z",
    "expected_Z_energy",
]


class TraceConditionError(ValueError):
    """lambda = infinity requires 4*alpha + 2*beta > 1 (trace-class noise)."""


@dataclass(frozen=True)
class FilterParams:
    """Parameters of the 3DVAR gain and noise model.

    The model covariance is C = omega*sigma0^2*A^(-2 zeta) and the
    observation covariance scale is Gamma0 = sigma0^2*A^(-2 beta)*P_lam,
    with alpha = zeta - beta derived.
    """

    omega: float = 100.0
    sigma0: float = 0.005
    zeta: float = 0.5     # model covariance decay exponent
    beta: float = 0.0     # observation covariance decay exponent
    lam: float = math.inf  # observation cutoff (P_lambda)
    phi: float = 0.0      # OU shift for Z_phi

    def __post_init__(self):
        if self.omega < 0 or self.sigma0 < 0 or self.phi < 0:
            raise ValueError("omega, sigma0 and phi must be non-negative")

    @property
    def alpha(self) -> float:
        return self.zeta - self.beta

    @property
    def epsilon(self) -> float:
        """Noise scale epsilon = omega * sigma0."""
        return self.omega * self.sigma0

    def check_trace_class(self):
        if math.isinf(self.lam):
            if 4 * self.alpha + 2 * self.beta <= 1:
                raise TraceConditionError(
                    f"4*alpha + 2*beta = {4 * self.alpha + 2 * self.beta:.3g} <= 1"
                )
            if self.alpha <= -0.5:
                raise TraceConditionError(f"alpha = {self.alpha:.3g} <= -1/2")


def _philox_key(seed: int, role: str) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(role.encode()))
    a, b = ss.generate_state(2, dtype=np.uint64)
    return (int(a) << 64) | int(b)


@dataclass(frozen=True)
class NoiseStream:
    """Counter-based Gaussian stream, reproducible per (seed, role, step)."""

    seed: int
    role: str = "noise"

    def normals(self, step: int, shape: tuple[int, ...]) -> np.ndarray:
        bg = np.random.Philox(key=_philox_key(self.seed, self.role),
                              counter=step << 64)
        return np.random.Generator(bg).standard_normal(shape)

    def child(self, role: str) -> "NoiseStream":
        return NoiseStream(self.seed, f"{self.role}/{role}")


def _complex_reality_normals(s: NoiseStream, step: int, N: int) -> np.ndarray:
    """Reality-paired complex normals, E|xi_k|^2 = 1 per stored mode.

    Antisymmetrizing i.i.d. unit complex Gaussians preserves the per-mode
    variance and enforces xi[-k] = -conj(xi[k]); mirrored modes are fully
    anticorrelated, distinct modes independent.
    """
    raw = s.normals(step, (2, N, N))
    eta = (raw[0] + 1j * raw[1]) / math.sqrt(2.0)
    flipped = np.roll(eta[::-1, ::-1], 1, axis=(0, 1))
    xi = (eta - np.conj(flipped)) / math.sqrt(2.0)
    xi[~sp.mode_mask(N)] = 0.0
    return xi


def _noise_std(p: FilterParams, N: int, L: float, dt: float) -> np.ndarray:
    """Per-mode std of the increment of omega*sigma0*A^(-2a-b)*P_lam*W."""
    musq = sp.stokes_eigenvalues(N)
    std = p.epsilon * musq ** (-(2 * p.alpha + p.beta)) * math.sqrt(dt)
    return np.where(sp.retained_mask(p.lam, N, L), std, 0.0)


def noise_increment(
    p: FilterParams, dt: float, s: NoiseStream, N: int,
    L: float = 2 * math.pi, step: int = 0,
) -> SpectralField:
    """Increment of the filter noise over dt, supported on P_lambda modes."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0 or p.epsilon == 0:
        return sp.zero_field(N, L)
    xi = _complex_reality_normals(s, step, N)
    return SpectralField(xi * _noise_std(p, N, L, dt), L)


def ou_substep(
    m: SpectralField,
    u: SpectralField,
    p: FilterParams,
    dt: float,
    s: NoiseStream | None = None,
    step: int = 0,
    exact: bool = False,
) -> SpectralField:
    """Mean-reversion substep: nudge retained modes of m toward u, add noise.

    Euler-Maruyama by default; with exact=True the per-mode linear SDE is
    advanced with its exponential decay and exact-variance increment.
    """
    N, L = m.N, m.L
    musq = sp.stokes_eigenvalues(N)
    retained = sp.retained_mask(p.lam, N, L)
    rate = p.omega * musq ** (-2 * p.alpha)
    diff = m.coeffs - u.coeffs

    if exact:
        decay = np.exp(-rate * dt)
        new_diff = np.where(retained, decay * diff, diff)
        if s is not None and p.epsilon > 0:
            # exact-variance additive increment of the per-mode OU process
            sigma = p.epsilon * musq ** (-(2 * p.alpha + p.beta))
            var = np.where(rate > 0, sigma**2 * (1 - np.exp(-2 * rate * dt))
                           / np.where(rate > 0, 2 * rate, 1.0), sigma**2 * dt)
            xi = _complex_reality_normals(s, step, N)
            new_diff = new_diff + np.where(retained, np.sqrt(var), 0.0) * xi
        return SpectralField(sp._masked(u.coeffs + new_diff), L)

    out = m.coeffs - np.where(retained, rate * diff * dt, 0.0)
    if s is not None and p.epsilon > 0:
        xi = _complex_reality_normals(s, step, N)
        out = out + xi * _noise_std(p, N, L, dt)
    return SpectralField(sp._masked(out), L)


def filter_step(
    m: SpectralField,
    u_next: SpectralField,
    p: FilterParams,
    np_: NseParams,
    s: NoiseStream | None,
    step: int = 0,
    f: SpectralField | None = None,
    exact_ou: bool = False,
) -> SpectralField:
    """One split step: Navier-Stokes substep, then OU substep toward u_next.

    u_next is the signal state at the end of the step (time t + dt).
    """
    m1 = nse_step(m, np_, f, t=step * np_.dt)
    return ou_substep(m1, u_next, p, np_.dt, s, step=step, exact=exact_ou)


@dataclass
class RunRecord:
    """Time series produced by a paired signal/estimator integration."""

    times: np.ndarray
    mode_list: list[tuple[int, int]]
    signal_modes: np.ndarray      # complex, shape (len(times), len(mode_list))
    estimator_modes: np.ndarray
    error_h: np.ndarray           # |m - u|
    error_v: np.ndarray           # ||m - u||
    signal_h: np.ndarray          # |u|
    manifest: dict = field(default_factory=dict)
    states: list[SpectralField] | None = None
    state_times: list[float] | None = None

    def relative_error(self) -> np.ndarray:
        return self.error_h / np.where(self.signal_h < 1e-14, np.nan, self.signal_h)


DEFAULT_MODES = [(1, 0), (1, 1), (2, 2), (4, 4), (8, 8)]


def run_filter(
    m0: SpectralField,
    u0: SpectralField,
    p: FilterParams,
    np_: NseParams,
    T: float,
    s: NoiseStream | None,
    mode_list: list[tuple[int, int]] | None = None,
    stride: int = 1,
    exact_ou: bool = False,
    snapshot_stride: int | None = None,
    signal_provider: Callable[[int], SpectralField] | None = None,
) -> RunRecord:
    """Integrate signal and estimator together over [0, T].

    If signal_provider is given it must return the signal state after step n
    (n = 1 .. n_steps); otherwise the signal is stepped internally from u0.
    """
    if mode_list is None:
        mode_list = DEFAULT_MODES
    f = np_.forcing()
    n_steps = int(round(T / np_.dt))

    times, u_modes, m_modes, eh, ev, uh = [], [], [], [], [], []
    states, state_times = [], []

    def sample(t, u, m):
        times.append(t)
        u_modes.append([u.mode(*k) for k in mode_list])
        m_modes.append([m.mode(*k) for k in mode_list])
        e = m - u
        eh.append(sp.sobolev_norm(0, e))
        ev.append(sp.sobolev_norm(1, e))
        uh.append(sp.sobolev_norm(0, u))

    u, m = u0, m0
    sample(0.0, u, m)
    if snapshot_stride:
        states.append(m)
        state_times.append(0.0)
    for n in range(1, n_steps + 1):
        if signal_provider is not None:
            u = signal_provider(n)
        else:
            u = nse_step(u, np_, f, t=(n - 1) * np_.dt)
        m = filter_step(m, u, p, np_, s, step=n - 1, f=f, exact_ou=exact_ou)
        if n % stride == 0 or n == n_steps:
            sample(n * np_.dt, u, m)
        if snapshot_stride and (n % snapshot_stride == 0 or n == n_steps):
            states.append(m)
            state_times.append(n * np_.dt)

    return RunRecord(
        times=np.asarray(times),
        mode_list=list(mode_list),
        signal_modes=np.asarray(u_modes),
        estimator_modes=np.asarray(m_modes),
        error_h=np.asarray(eh),
        error_v=np.asarray(ev),
        signal_h=np.asarray(uh),
        states=states if snapshot_stride else None,
        state_times=state_times if snapshot_stride else None,
    )


@dataclass(frozen=True)
class OuState:
    """Stochastic convolution Z_phi at time index `step`."""

    Z: SpectralField
    phi: float
    t: float = 0.0


def _Z_stationary_var(p: FilterParams, delta: float, N: int, L: float) -> np.ndarray:
    """Per-mode stationary variance (omega*sigma0*mu^(-2a-b))^2 / (2(delta*mu + phi))."""
    musq = sp.stokes_eigenvalues(N)
    sigma = p.epsilon * musq ** (-(2 * p.alpha + p.beta))
    var = sigma**2 / (2 * (delta * musq + p.phi))
    return np.where(sp.retained_mask(p.lam, N, L), var, 0.0)


def expected_Z_energy(p: FilterParams, delta: float, N: int,
                      L: float = 2 * math.pi) -> float:
    """Stationary E||Z_phi(0)||^2 in the gradient (V) norm ||.|| = |A^(1/2) .|.

    Equals (1/2) eps^2 trace((delta*A + phi)^(-1) A^(1-4a-2b) P_lam).

    Evaluated on the resolved lattice (lambda = inf means all stored modes).
    """
    musq = sp.stokes_eigenvalues(N)
    retained = sp.retained_mask(p.lam, N, L)
    terms = musq * _Z_stationary_var(p, delta, N, L)
    return float(np.sum(terms[retained]))


def stationary_Z_sample(
    p: FilterParams, delta: float, s: NoiseStream, N: int,
    L: float = 2 * math.pi, step: int = 0,
) -> OuState:
    """Draw Z_phi(0) from its stationary per-mode Gaussian law."""
    if math.isinf(p.lam):
        p.check_trace_class()
    if p.epsilon == 0:
        return OuState(sp.zero_field(N, L), p.phi)
    xi = _complex_reality_normals(s, step, N)
    std = np.sqrt(_Z_stationary_var(p, delta, N, L))
    return OuState(SpectralField(xi * std, L), p.phi)


def evolve_Z(
    z: OuState, p: FilterParams, delta: float, dt: float, s: NoiseStream,
    step: int = 0,
) -> OuState:
    """Advance Z_phi by dt with the exact per-mode OU update.

    Each mode decays by exp(-(delta*mu + phi)*dt) and receives a Gaussian
    increment with the exact transition variance, so the stationary law is
    preserved for any dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    N, L = z.Z.N, z.Z.L
    musq = sp.stokes_eigenvalues(N)
    rate = delta * musq + p.phi
    decay = np.exp(-rate * dt)
    out = z.Z.coeffs * decay
    if p.epsilon > 0:
        sigma = p.epsilon * musq ** (-(2 * p.alpha + p.beta))
        var = sigma**2 * (1 - decay**2) / (2 * rate)
        xi = _complex_reality_normals(s, step, N)
        out = out + np.where(sp.retained_mask(p.lam, N, L), np.sqrt(var), 0.0) * xi
    return OuState(SpectralField(sp._masked(out), L), p.phi, z.t + dt)
