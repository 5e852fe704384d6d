"""Divergence-free Fourier representation of velocity fields on the torus.

Fields are expanded in the solenoidal basis

    psi_k(x) = (k_perp / |k|) exp(2*pi*i k.x / L),   k in Z^2 \\ {0},

with k_perp = (k2, -k1).  A field is stored as one complex scalar
coefficient per wavevector, laid out on the standard FFT grid, so
divergence-freeness is structural.  Real fields satisfy the reality
constraint c[-k] = -conj(c[k]).

The Stokes operator is normalized so that its eigenvalue at wavevector k
is |k|^2 (smallest eigenvalue 1).  The H inner product is
<f, g> = sum_k f_k conj(g_k), which on the collocation grid equals the
mean of the pointwise dot product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

__all__ = [
    "SpectralField",
    "GridVelocityField",
    "zero_field",
    "field_from_modes",
    "random_field",
    "to_grid",
    "to_spectral",
    "leray_project",
    "apply_stokes_power",
    "sobolev_norm",
    "project_modes",
    "complement_modes",
    "bilinear",
    "self_advection",
    "inner",
    "mode_mask",
    "dealias_mask",
    "stokes_eigenvalues",
    "retained_mask",
    "symmetrize",
]


class ResolutionMismatchError(ValueError):
    """Operands live on incompatible grids."""


@lru_cache(maxsize=None)
def _wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(N, d=1.0 / N)  # integer wavenumbers in FFT layout
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return k1, k2


@lru_cache(maxsize=None)
def mode_mask(N: int) -> np.ndarray:
    """Boolean mask of stored modes: k != 0 and |k_i| <= N/2 - 1."""
    k1, k2 = _wavenumbers(N)
    kmax = N // 2 - 1
    mask = (np.abs(k1) <= kmax) & (np.abs(k2) <= kmax)
    mask = mask.copy()
    mask[0, 0] = False
    return mask


@lru_cache(maxsize=None)
def dealias_mask(N: int) -> np.ndarray:
    """2/3-rule mask: keep max(|k1|, |k2|) <= N/3."""
    k1, k2 = _wavenumbers(N)
    cut = N // 3
    return mode_mask(N) & (np.abs(k1) <= cut) & (np.abs(k2) <= cut)


@lru_cache(maxsize=None)
def stokes_eigenvalues(N: int) -> np.ndarray:
    """|k|^2 on the FFT grid, with unstored entries set to 1 (never used)."""
    k1, k2 = _wavenumbers(N)
    musq = k1 * k1 + k2 * k2
    musq[~mode_mask(N)] = 1.0
    return musq


@lru_cache(maxsize=None)
def _unit_kperp(N: int) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = _wavenumbers(N)
    norm = np.sqrt(stokes_eigenvalues(N))
    return k2 / norm, -k1 / norm


@dataclass(frozen=True)
class SpectralField:
    """Immutable divergence-free field in the solenoidal Fourier basis."""

    coeffs: np.ndarray  # complex, shape (N, N), FFT layout
    L: float

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return SpectralField(self.coeffs + other.coeffs, self.L)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return SpectralField(self.coeffs - other.coeffs, self.L)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * scalar, self.L)

    __rmul__ = __mul__

    def mode(self, k1: int, k2: int) -> complex:
        return complex(self.coeffs[k1 % self.N, k2 % self.N])


@dataclass(frozen=True)
class GridVelocityField:
    """Velocity components on the N x N collocation grid."""

    ux: np.ndarray
    uy: np.ndarray
    L: float

    @property
    def N(self) -> int:
        return self.ux.shape[0]


def _check_compatible(f, g):
    if f.N != g.N or f.L != g.L:
        raise ResolutionMismatchError(
            f"incompatible grids: ({f.N}, L={f.L}) vs ({g.N}, L={g.L})"
        )


def _masked(coeffs: np.ndarray) -> np.ndarray:
    out = np.array(coeffs, dtype=np.complex128)
    out[~mode_mask(out.shape[0])] = 0.0
    return out


def _conj_mirror(coeffs: np.ndarray) -> np.ndarray:
    """conj(c[-k]) on the FFT grid."""
    flipped = coeffs[::-1, ::-1]
    flipped = np.roll(flipped, 1, axis=(0, 1))
    return np.conj(flipped)


def symmetrize(f: SpectralField) -> SpectralField:
    """Project onto the reality-constrained subspace c[-k] = -conj(c[k])."""
    c = f.coeffs
    return SpectralField(_masked(0.5 * (c - _conj_mirror(c))), f.L)


def zero_field(N: int, L: float = 2 * math.pi) -> SpectralField:
    return SpectralField(np.zeros((N, N), dtype=np.complex128), L)


def field_from_modes(
    modes: dict[tuple[int, int], complex],
    N: int,
    L: float = 2 * math.pi,
    real: bool = True,
) -> SpectralField:
    """Build a field from {k: coefficient}.

    With real=True each mode's reality partner -conj(c) at -k is added
    automatically (entries for both k and -k must not both be given).
    """
    c = np.zeros((N, N), dtype=np.complex128)
    for (k1, k2), val in modes.items():
        c[k1 % N, k2 % N] += val
        if real:
            c[-k1 % N, -k2 % N] += -np.conj(val)
    return SpectralField(_masked(c), L)


def random_field(
    rng: np.random.Generator,
    N: int,
    L: float = 2 * math.pi,
    decay: float = 1.0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random reality-constrained field with |k|^(-decay) spectral envelope."""
    raw = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    c = 0.5 * (raw - _conj_mirror(raw))
    envelope = amplitude * stokes_eigenvalues(N) ** (-decay / 2.0)
    return SpectralField(_masked(c * envelope), L)


def to_grid(f: SpectralField) -> GridVelocityField:
    """Reconstruct the velocity components on the collocation grid."""
    px, py = _unit_kperp(f.N)
    ux = np.fft.ifft2(f.coeffs * px, norm="forward").real
    uy = np.fft.ifft2(f.coeffs * py, norm="forward").real
    return GridVelocityField(ux, uy, f.L)


def _project_coeffs(uhat_x: np.ndarray, uhat_y: np.ndarray) -> np.ndarray:
    """Scalar coefficients of the solenoidal part of a Fourier vector field.

    Dotting with the unit vector k_perp/|k| is exactly the Leray-Helmholtz
    projection: the gradient (k-parallel) component is discarded.
    """
    N = uhat_x.shape[0]
    px, py = _unit_kperp(N)
    return _masked(uhat_x * px + uhat_y * py)


def to_spectral(g: GridVelocityField) -> SpectralField:
    uhat_x = np.fft.fft2(g.ux, norm="forward")
    uhat_y = np.fft.fft2(g.uy, norm="forward")
    return SpectralField(_project_coeffs(uhat_x, uhat_y), g.L)


def leray_project(g: GridVelocityField) -> SpectralField:
    """Project a grid vector field onto divergence-free, mean-zero fields."""
    return to_spectral(g)


def apply_stokes_power(s: float, f: SpectralField) -> SpectralField:
    return SpectralField(_masked(f.coeffs * stokes_eigenvalues(f.N) ** s), f.L)


def sobolev_norm(s: float, f: SpectralField) -> float:
    musq = stokes_eigenvalues(f.N)
    return float(np.sqrt(np.sum(musq**s * np.abs(f.coeffs) ** 2)))


def inner(f: SpectralField, g: SpectralField) -> float:
    """H inner product <f, g> = sum_k f_k conj(g_k) (real for real fields)."""
    _check_compatible(f, g)
    return float(np.sum(f.coeffs * np.conj(g.coeffs)).real)


def grid_inner(g: GridVelocityField, h: GridVelocityField) -> float:
    """H inner product evaluated by grid quadrature: mean of the dot product."""
    _check_compatible(g, h)
    return float(np.mean(g.ux * h.ux + g.uy * h.uy))


def retained_mask(lam: float, N: int, L: float) -> np.ndarray:
    """P_lambda mask: |2 pi k|^2 < lambda L^2, i.e. |k|^2 < lambda L^2 / 4 pi^2."""
    if math.isinf(lam):
        return mode_mask(N)
    musq = stokes_eigenvalues(N)
    return mode_mask(N) & (musq < lam * L * L / (4 * math.pi**2))


def project_modes(lam: float, f: SpectralField) -> SpectralField:
    """Low-mode projection P_lambda."""
    out = f.coeffs.copy()
    out[~retained_mask(lam, f.N, f.L)] = 0.0
    return SpectralField(out, f.L)


def complement_modes(lam: float, f: SpectralField) -> SpectralField:
    """High-mode projection Q_lambda = I - P_lambda."""
    return f - project_modes(lam, f)


def _grad_grids(coeffs: np.ndarray, L: float) -> tuple[np.ndarray, ...]:
    """Physical-space gradients of both velocity components."""
    N = coeffs.shape[0]
    k1, k2 = _wavenumbers(N)
    px, py = _unit_kperp(N)
    fac = 2j * math.pi / L
    dx = fac * k1
    dy = fac * k2
    ux_x = np.fft.ifft2(coeffs * px * dx, norm="forward").real
    ux_y = np.fft.ifft2(coeffs * px * dy, norm="forward").real
    uy_x = np.fft.ifft2(coeffs * py * dx, norm="forward").real
    uy_y = np.fft.ifft2(coeffs * py * dy, norm="forward").real
    return ux_x, ux_y, uy_x, uy_y


def bilinear(u: SpectralField, v: SpectralField) -> SpectralField:
    """Symmetric bilinear form B(u,v) = (P(u.grad v) + P(v.grad u)) / 2.

    Evaluated pseudo-spectrally with exact 2/3-rule dealiasing: inputs are
    truncated to the dealiased band before forming products, and the result
    is truncated again, so the quadratic term is alias-free.
    """
    _check_compatible(u, v)
    N, L = u.N, u.L
    da = dealias_mask(N)
    cu = np.where(da, u.coeffs, 0.0)
    cv = np.where(da, v.coeffs, 0.0)

    px, py = _unit_kperp(N)
    ux = np.fft.ifft2(cu * px, norm="forward").real
    uy = np.fft.ifft2(cu * py, norm="forward").real
    vx = np.fft.ifft2(cv * px, norm="forward").real
    vy = np.fft.ifft2(cv * py, norm="forward").real
    vx_x, vx_y, vy_x, vy_y = _grad_grids(cv, L)
    ux_x, ux_y, uy_x, uy_y = _grad_grids(cu, L)

    wx = 0.5 * (ux * vx_x + uy * vx_y + vx * ux_x + vy * ux_y)
    wy = 0.5 * (ux * vy_x + uy * vy_y + vx * uy_x + vy * uy_y)

    what_x = np.fft.fft2(wx, norm="forward")
    what_y = np.fft.fft2(wy, norm="forward")
    out = _project_coeffs(what_x, what_y)
    out[~da] = 0.0
    return SpectralField(out, L)


def self_advection(u: SpectralField) -> SpectralField:
    """B(u,u) in rotational form, P((curl u) J u); cheaper than bilinear().

    Identical to bilinear(u, u): the gradient part of u.grad u is removed
    by the projection, and both evaluations are alias-free.  The three
    inverse and two forward transforms are batched into one call each;
    this sits on the hot path of every time step.
    """
    N, L = u.N, u.L
    da = dealias_mask(N)
    c = np.where(da, u.coeffs, 0.0)

    px, py = _unit_kperp(N)
    # curl of c_k psi_k is -(2 pi i |k| / L) c_k exp(2 pi i k.x / L)
    fac = 2j * math.pi / L
    curl_hat = -fac * np.sqrt(stokes_eigenvalues(N)) * c
    stack = np.stack([c * px, c * py, curl_hat])
    ux, uy, xi = sfft.ifft2(stack, axes=(-2, -1), norm="forward").real

    w = np.stack([-xi * uy, xi * ux])
    what_x, what_y = sfft.fft2(w, axes=(-2, -1), norm="forward")
    out = _project_coeffs(what_x, what_y)
    out[~da] = 0.0
    return SpectralField(out, L)


def divergence_max(g: GridVelocityField) -> float:
    """Max pointwise divergence of a grid field (spectral derivative)."""
    N, L = g.N, g.L
    k1, k2 = _wavenumbers(N)
    fac = 2j * math.pi / L
    div_hat = fac * (k1 * np.fft.fft2(g.ux, norm="forward") + k2 * np.fft.fft2(g.uy, norm="forward"))
    return float(np.max(np.abs(np.fft.ifft2(div_hat, norm="forward").real)))
