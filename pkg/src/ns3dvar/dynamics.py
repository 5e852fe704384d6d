"""Deterministic signal dynamics: du/dt + delta*A*u + B(u,u) = f.

Time stepping uses an integrating-factor treatment of the stiff Stokes term
combined with Heun's method (2nd order) for the nonlinear and forcing terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .spectral import SpectralField

__all__ = [
    "NseParams",
    "SignalTrajectory",
    "DivergedStepError",
    "nse_step",
    "integrate_signal",
    "spin_up",
    "default_forcing",
]


class DivergedStepError(RuntimeError):
    """The integration produced NaN/inf; the time step is too large."""

    def __init__(self, t: float):
        super().__init__(f"integration diverged at t={t:.6g} (reduce dt)")
        self.t = t


def default_forcing(N: int, L: float = 2 * math.pi, amplitude: float = 0.06,
                    kf: int = 1) -> SpectralField:
    """Steady two-mode forcing on the diagonal pair (kf, kf), (kf, -kf).

    The default (amplitude, kf, viscosity) combination is tuned so the flow
    is time-dependent and chaotic rather than a steady laminar state;
    forcing at kf > 1 injects shear at intermediate scales, which is what
    makes the flow genuinely chaotic at desk resolution.
    """
    return sp.field_from_modes(
        {(kf, kf): amplitude, (kf, -kf): amplitude}, N, L, real=True
    )


@dataclass(frozen=True)
class NseParams:
    """Physical and discretization parameters of the signal model."""

    N: int = 64
    L: float = 2 * math.pi
    nu: float = 0.01
    dt: float = 0.005
    forcing_amplitude: float = 0.06
    forcing_wavenumber: int = 1

    def __post_init__(self):
        if self.nu <= 0 or self.dt <= 0:
            raise ValueError("nu and dt must be positive")

    @property
    def delta(self) -> float:
        """Rescaled dissipation 4 pi^2 nu / L^2 (equals nu when L = 2 pi)."""
        return 4 * math.pi**2 * self.nu / self.L**2

    def forcing(self) -> SpectralField:
        return default_forcing(self.N, self.L, self.forcing_amplitude,
                               self.forcing_wavenumber)


@dataclass
class SignalTrajectory:
    times: list[float] = field(default_factory=list)
    states: list[SpectralField] = field(default_factory=list)
    R_hat: float = 0.0  # running sup of ||u(t)||^2

    def append(self, t: float, u: SpectralField):
        self.times.append(t)
        self.states.append(u)
        self.R_hat = max(self.R_hat, sp.sobolev_norm(1, u) ** 2)

    def state_at(self, t: float) -> SpectralField:
        idx = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise KeyError(f"no stored state at t={t}")
        return self.states[idx]


def _rhs_nonlinear(u: SpectralField, f: SpectralField) -> np.ndarray:
    """Coefficients of -B(u,u) + f."""
    return f.coeffs - sp.self_advection(u).coeffs


def nse_step(u: SpectralField, p: NseParams, f: SpectralField | None = None,
             t: float = 0.0) -> SpectralField:
    """One IF-Heun step of the deterministic Navier-Stokes equation."""
    if u.N != p.N:
        raise sp.ResolutionMismatchError(f"state N={u.N}, params N={p.N}")
    if f is None:
        f = p.forcing()
    dt = p.dt
    decay = np.exp(-p.delta * sp.stokes_eigenvalues(p.N) * dt)
    decay[~sp.mode_mask(p.N)] = 0.0

    n0 = _rhs_nonlinear(u, f)
    predictor = SpectralField(decay * (u.coeffs + dt * n0), u.L)
    n1 = _rhs_nonlinear(predictor, f)
    out = decay * u.coeffs + 0.5 * dt * (decay * n0 + n1)
    if not np.all(np.isfinite(out)):
        raise DivergedStepError(t)
    return SpectralField(out, u.L)


def integrate_signal(
    u0: SpectralField,
    T: float,
    p: NseParams,
    stride: int = 1,
) -> SignalTrajectory:
    """Integrate over [0, T], sampling every `stride` steps."""
    if T < 0:
        raise ValueError("T must be non-negative")
    f = p.forcing()
    traj = SignalTrajectory()
    traj.append(0.0, u0)
    n_steps = int(round(T / p.dt))
    u = u0
    for n in range(n_steps):
        u = nse_step(u, p, f, t=n * p.dt)
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            traj.append((n + 1) * p.dt, u)
    return traj


def spin_up(
    p: NseParams,
    T_spin: float,
    seed: int,
    record_window: float = 0.25,
) -> tuple[SpectralField, float]:
    """Discard a transient and return (state, R_hat over the final window).

    The initial condition is a random low-mode field; R_hat is the running
    sup of ||u||^2 over the trailing `record_window` fraction of the run.
    """
    if T_spin <= 0:
        raise ValueError("T_spin must be positive")
    rng = np.random.default_rng(seed)
    u = sp.random_field(rng, p.N, p.L, decay=2.0, amplitude=0.1)
    f = p.forcing()
    n_steps = int(round(T_spin / p.dt))
    n_record = int(n_steps * record_window)
    r_hat = 0.0
    for n in range(n_steps):
        u = nse_step(u, p, f, t=n * p.dt)
        if n >= n_steps - n_record:
            r_hat = max(r_hat, sp.sobolev_norm(1, u) ** 2)
    return u, r_hat
