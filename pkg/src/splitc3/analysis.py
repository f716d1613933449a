"""Numerical oracles: the local-error function S, spectral one-step
formulas, and convergence-order estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flows import ComplexCoeffs

_COEFFS = ComplexCoeffs()
# The direct formula cancels like eps/|z|^3 near the origin, so the series is
# used throughout |z| < 1 (its truncation error there is far below round-off).
_SERIES_CUTOFF = 1.0
_SERIES_TERMS = 34


def alpha_coefficient(k: int, coeffs: ComplexCoeffs = _COEFFS) -> complex:
    """Taylor coefficient alpha_k of S (before division by k!)."""
    a, abar = coeffs.a, coeffs.abar
    return a + 2 ** (k - 1) * abar**k - 1.0 / (k + 1)


def _S_direct(z: np.ndarray, coeffs: ComplexCoeffs) -> np.ndarray:
    a, abar = coeffs.a, coeffs.abar
    z = np.asarray(z, dtype=complex)
    return a * np.exp(z) + 0.5 * np.exp(2 * abar * z) + abar - (np.exp(z) - 1.0) / z


def _S_series(z: np.ndarray, coeffs: ComplexCoeffs) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    term = z**3 / 6.0  # z^k / k! at k = 3
    for k in range(3, 3 + _SERIES_TERMS):
        out = out + alpha_coefficient(k, coeffs) * term
        term = term * z / (k + 1)
    return out


def S(z, coeffs: ComplexCoeffs = _COEFFS):
    """Local-error amplification factor of the corrected third-order scheme.

    Direct formula away from the origin; truncated Taylor series below
    |z| = 1 to avoid cancellation (in particular everywhere below 1e-3).
    """
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_CUTOFF
    if np.any(small):
        out[small] = _S_series(z[small], coeffs)
    if np.any(~small):
        out[~small] = _S_direct(z[~small], coeffs)
    return out[0] if scalar else out


@dataclass
class SBoundReport:
    n_points: int
    violations: list
    max_slack: float  # most negative margin would be a violation; this is min margin
    sup_ratio: float  # sup over z <= -1 of |S(z) z^-3|

    @property
    def passed(self) -> bool:
        return not self.violations


def default_z_grid(n_points: int = 12000) -> np.ndarray:
    """Logarithmic grid on [-1e6, 50] straddling both bound regimes."""
    n_neg = int(0.7 * n_points)
    n_pos = n_points - n_neg
    neg = -np.logspace(np.log10(1e6), np.log10(1e-8), n_neg)
    pos = np.logspace(np.log10(1e-8), np.log10(50.0), n_pos)
    return np.concatenate([neg, [-1.0], pos, [50.0]])


def check_S_bounds(z_grid: np.ndarray | None = None) -> SBoundReport:
    """Assert |S(z)| <= |z|^3 e^z for z >= -1 and |S(z)| <= sqrt(3/2) |z|^3 for z <= -1."""
    z = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    s_abs = np.abs(S(z))
    bound = np.where(z >= -1.0, np.abs(z) ** 3 * np.exp(z), np.sqrt(1.5) * np.abs(z) ** 3)
    slack = bound - s_abs
    violations = [float(zz) for zz in z[slack < 0]]
    left = z <= -1.0
    ratios = s_abs[left] / np.abs(z[left]) ** 3
    return SBoundReport(
        n_points=len(z),
        violations=violations,
        max_slack=float(slack.min()),
        sup_ratio=float(ratios.max()),
    )


@dataclass
class SpectralProblem:
    """Diagonalized 1D Dirichlet problem in the sine eigenbasis.

    `eigenvalues` may be the continuous values -(j pi)^2 or the discrete
    finite-difference ones when auditing the grid realization.
    """

    eigenvalues: np.ndarray

    @staticmethod
    def continuous(n_modes: int) -> "SpectralProblem":
        j = np.arange(1, n_modes + 1)
        return SpectralProblem(eigenvalues=-((j * np.pi) ** 2))

    @staticmethod
    def discrete_fd(n: int) -> "SpectralProblem":
        dx = 1.0 / (n + 1)
        k = np.arange(1, n + 1)
        return SpectralProblem(
            eigenvalues=-(2.0 / dx**2) * (1.0 - np.cos(k * np.pi * dx))
        )


def fd_eigenvalues(n: int) -> np.ndarray:
    return SpectralProblem.discrete_fd(n).eigenvalues


def spectral_exact_step(p: SpectralProblem, u, f, tau: float) -> np.ndarray:
    lam = p.eigenvalues
    e = np.exp(tau * lam)
    return e * np.asarray(u, dtype=complex) + (e - 1.0) / lam * np.asarray(f, dtype=complex)


def spectral_scheme_step(
    p: SpectralProblem, u, f, q, tau: float, coeffs: ComplexCoeffs = _COEFFS
) -> np.ndarray:
    """One step of the corrected third-order scheme in the eigenbasis."""
    lam = p.eigenvalues
    a, abar = coeffs.a, coeffs.abar
    e = np.exp(tau * lam)
    e2 = np.exp(2 * abar * tau * lam)
    u = np.asarray(u, dtype=complex)
    f = np.asarray(f, dtype=complex)
    q = np.asarray(q, dtype=complex)
    return e * u + tau * (a * e + 0.5 * e2 + abar) * (f - q) + (e - 1.0) / lam * q


@dataclass
class ConvergenceReport:
    scheme: str
    taus: list
    errors: list
    pairwise_orders: list = field(default_factory=list)
    slope: float = float("nan")


def estimate_order(pairs, scheme: str = "") -> ConvergenceReport:
    """Pairwise log2 ratios and least-squares slope of log(err) vs log(tau)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("need at least 3 ladder points")
    taus = [float(t) for t, _ in pairs]
    errs = [float(e) for _, e in pairs]
    if any(e <= 0 for e in errs):
        raise ValueError("errors must be positive")
    if any(t2 >= t1 for t1, t2 in zip(taus, taus[1:])):
        raise ValueError("tau ladder must be strictly decreasing")
    pw = [
        np.log(e1 / e2) / np.log(t1 / t2)
        for (t1, e1), (t2, e2) in zip(pairs, pairs[1:])
    ]
    slope = float(np.polyfit(np.log(taus), np.log(errs), 1)[0])
    return ConvergenceReport(
        scheme=scheme, taus=taus, errors=errs, pairwise_orders=[float(p) for p in pw],
        slope=slope,
    )


def sine_transform_matrix(n: int) -> np.ndarray:
    """Eigenvector matrix of the 1D FD Dirichlet Laplacian: E[i, k] = sin((k+1) pi x_i)."""
    dx = 1.0 / (n + 1)
    x = dx * np.arange(1, n + 1)
    k = np.arange(1, n + 1)
    return np.sin(np.outer(x, k) * np.pi)


def to_sine_coeffs(values: np.ndarray) -> np.ndarray:
    n = len(values)
    E = sine_transform_matrix(n)
    return (2.0 / (n + 1)) * (E.T @ values)


def from_sine_coeffs(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs)
    return sine_transform_matrix(n) @ coeffs
