"""Krylov evaluation of e^{sL} v and the phi1 action for complex steps s.

The Arnoldi basis of K_m(L, v) does not depend on the scalar step, so s is
folded into the exponential of the small Hessenberg matrix.  Long steps are
subdivided a priori from a Gershgorin bound on the spectrum, with recursive
halving as a fallback when the basis cap is reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .mesh import DiscreteOperator, Field

# Target |s|*rho(L) per substep; Arnoldi converges quickly below this.
_Z_PER_SUBSTEP = 30.0
_BREAKDOWN_TOL = 1e-14


class AccuracyError(RuntimeError):
    """Krylov iteration did not meet the tolerance within its budget."""

    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (achieved residual estimate {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ExpmvConfig:
    tol: float = 1e-12
    max_krylov_dim: int = 100
    max_substeps: int = 65536

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_krylov_dim < 2:
            raise ValueError("max_krylov_dim must be at least 2")


_GERSHGORIN_CACHE: dict[int, float] = {}


def _gershgorin(L: sp.spmatrix) -> float:
    key = id(L)
    if key not in _GERSHGORIN_CACHE:
        if len(_GERSHGORIN_CACHE) > 64:
            _GERSHGORIN_CACHE.clear()
        _GERSHGORIN_CACHE[key] = float(np.abs(L).sum(axis=1).max())
    return _GERSHGORIN_CACHE[key]


def _arnoldi_step(s: complex, L, v: np.ndarray, tol: float, mmax: int, scale: float):
    """One Krylov approximation of e^{sL} v.

    Returns (w, err_estimate, converged).  The error estimate is the leading
    coefficient of the omitted basis vector, read off the exponential of the
    Hessenberg matrix augmented by the h_{m+1,m} row.
    """
    n = v.shape[0]
    beta = float(np.linalg.norm(v))
    if beta == 0.0:
        return np.zeros(n, dtype=complex), 0.0, True
    mmax = min(mmax, n)
    V = np.empty((n, mmax + 1), dtype=complex)
    H = np.zeros((mmax + 1, mmax), dtype=complex)
    V[:, 0] = v / beta

    checkpoints = set()
    m = 2
    while m < mmax:
        checkpoints.add(m)
        m = int(np.ceil(m * 1.3)) + 1
    checkpoints.add(mmax)

    def evaluate(m: int):
        Haug = np.zeros((m + 1, m + 1), dtype=complex)
        Haug[: m + 1, :m] = H[: m + 1, :m]
        y = sla.expm(s * Haug)[:, 0]
        return y, beta * abs(y[m])

    for j in range(mmax):
        w = L @ V[:, j]
        # classical Gram-Schmidt with one reorthogonalization pass
        basis = V[:, : j + 1]
        for _ in range(2):
            h = basis.conj().T @ w
            H[: j + 1, j] += h
            w -= basis @ h
        hnext = np.linalg.norm(w)
        H[j + 1, j] = hnext
        m = j + 1
        if hnext <= _BREAKDOWN_TOL * scale:
            # happy breakdown: invariant subspace found, result exact
            y = sla.expm(s * H[:m, :m])[:, 0]
            return beta * (V[:, :m] @ y), 0.0, True
        V[:, j + 1] = w / hnext
        if m in checkpoints:
            y, err = evaluate(m)
            if err <= tol * beta:
                return beta * (V[:, : m + 1] @ y), err, True
    y, err = evaluate(mmax)
    return beta * (V[:, : mmax + 1] @ y), err, False


def _expmv_core(s: complex, L, v: np.ndarray, cfg: ExpmvConfig) -> np.ndarray:
    if s == 0:
        return v.astype(complex)
    rho = _gershgorin(L)
    nsub = max(1, int(np.ceil(abs(s) * rho / _Z_PER_SUBSTEP)))
    nsub = min(nsub, cfg.max_substeps)
    budget = [cfg.max_substeps - nsub]

    scale = rho + 1.0

    def advance(step: complex, w: np.ndarray, depth: int) -> np.ndarray:
        out, err, ok = _arnoldi_step(step, L, w, cfg.tol / nsub, cfg.max_krylov_dim, scale)
        if ok:
            return out
        if depth >= 40 or budget[0] <= 0:
            raise AccuracyError("expmv did not converge within substep budget", err)
        budget[0] -= 1
        half = advance(step / 2, w, depth + 1)
        return advance(step / 2, half, depth + 1)

    w = v.astype(complex)
    for _ in range(nsub):
        w = advance(s / nsub, w, 0)
    return w


def _check_step(s: complex) -> complex:
    s = complex(s)
    if s.real < 0:
        raise ValueError(f"step {s} has negative real part (backward diffusion)")
    return s


def expmv(s: complex, op: DiscreteOperator | sp.spmatrix, v: Field, cfg: ExpmvConfig) -> Field:
    """w ~= e^{sL} v to relative accuracy cfg.tol."""
    s = _check_step(s)
    L = op.L if isinstance(op, DiscreteOperator) else op
    if not np.all(np.isfinite(v.values)):
        raise ValueError("input field is not finite")
    return Field(_expmv_core(s, L, v.values, cfg), v.mesh)


def expmv_affine(
    s: complex,
    op: DiscreteOperator | sp.spmatrix,
    g: np.ndarray,
    v: Field,
    cfg: ExpmvConfig,
) -> Field:
    """e^{sL} v + s phi1(sL) g via one Krylov run on the augmented matrix."""
    s = _check_step(s)
    L = op.L if isinstance(op, DiscreteOperator) else op
    g = np.asarray(g)
    if not np.any(g):
        return expmv(s, L, v, cfg)
    n = L.shape[0]
    dtype = complex if np.iscomplexobj(g) else float
    aug = sp.bmat(
        [[L, sp.csr_matrix(g.reshape(n, 1).astype(dtype))], [None, sp.csr_matrix((1, 1))]],
        format="csr",
    )
    if s == 0:
        return v.copy()
    rho = _gershgorin(aug)
    nsub = max(1, int(np.ceil(abs(s) * rho / _Z_PER_SUBSTEP)))
    nsub = min(nsub, cfg.max_substeps)
    w = v.values.astype(complex)
    for _ in range(nsub):
        vhat = np.concatenate([w, [1.0]])
        what = _expmv_core(
            s / nsub, aug, vhat, ExpmvConfig(cfg.tol / nsub, cfg.max_krylov_dim, cfg.max_substeps)
        )
        w = what[:n]
    return Field(w, v.mesh)
