"""Exact flows of the split sub-equations.

Three flow types are composed by every scheme: the source flow, the
corrector flow (a shift by -t*q), and the affine diffusion flow with folded
boundary data.  All flows accept complex time steps and carry complex state;
no real-part projection is applied anywhere during integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expmv import ExpmvConfig, expmv, expmv_affine
from .mesh import DiscreteOperator, Field, Mesh, sample


class SingularFlowError(ArithmeticError):
    """Logistic flow denominator vanished at a node."""


@dataclass(frozen=True)
class ComplexCoeffs:
    """Substep coefficients of the third-order composition."""

    a: complex = 0.25 * (1 - 1j / np.sqrt(3.0))
    c: float = 0.5

    @property
    def abar(self) -> complex:
        return np.conj(self.a)


class SourceTerm:
    """Base for source terms with an exact flow."""

    def flow(self, t: complex, u: Field) -> Field:
        return Field(self.flow_values(t, u.values, u.mesh.interior_points()), u.mesh)

    def flow_values(self, t: complex, vals: np.ndarray, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class IndependentSource(SourceTerm):
    """Solution-independent f = f(x): flow u + t*f.

    `d_fn` is the analytic image D f, used (when supplied) for exact
    corrector boundary data; otherwise one-sided differences are applied.
    """

    def __init__(self, fn: Callable[..., float], d_fn: Callable[..., float] | None = None):
        self.fn = fn
        self.d_fn = d_fn
        self._cache: dict[int, Field] = {}

    def values(self, mesh: Mesh) -> Field:
        key = id(mesh)
        if key not in self._cache:
            self._cache[key] = sample(mesh, self.fn)
        return self._cache[key]

    def flow(self, t: complex, u: Field) -> Field:
        return Field(u.values + t * self.values(u.mesh).values, u.mesh)

    def flow_values(self, t, vals, pts):
        f = np.array([self.fn(*p) for p in np.atleast_2d(pts)])
        return vals + t * f


class LogisticSource(SourceTerm):
    """f(u) = M u (1 - u); exact flow u e^{Mt} / (1 + u (e^{Mt} - 1))."""

    def __init__(self, M: float):
        if M <= 0:
            raise ValueError("logistic rate M must be positive")
        self.M = M

    def flow_values(self, t, vals, pts=None):
        e = np.exp(self.M * t)
        denom = 1.0 + vals * (e - 1.0)
        bad = np.abs(denom) < 1e-12
        if np.any(bad):
            node = int(np.argmax(bad))
            raise SingularFlowError(f"logistic flow singular at node {node}")
        return vals * e / denom


class CustomExactSource(SourceTerm):
    """Delegates to a user-supplied exact flow callable."""

    def __init__(self, flow: Callable[[complex, Field], Field]):
        self._flow = flow

    def flow(self, t: complex, u: Field) -> Field:
        return self._flow(t, u)

    def flow_values(self, t, vals, pts):
        raise NotImplementedError("CustomExactSource only supports Field flow")


def source_flow(term: SourceTerm, t: complex, u: Field) -> Field:
    return term.flow(t, u)


def corrector_flow(q: Field, t: complex, u: Field) -> Field:
    return Field(u.values - t * q.values, u.mesh)


def diffusion_flow(
    op: DiscreteOperator,
    q: Field | None,
    t: complex,
    u: Field,
    cfg: ExpmvConfig,
) -> Field:
    """Exact discrete solution of u' = L u + g_b + q over complex time t."""
    g = op.g_b.astype(complex) if np.any(op.g_b) else op.g_b
    if q is not None and np.any(q.values):
        g = g + q.values
    if np.any(g):
        return expmv_affine(t, op, g, u, cfg)
    return expmv(t, op, u, cfg)
