"""Uniform-grid spatial discretization on the unit interval/square.

Interior nodes only are stored in state vectors; Dirichlet boundary data is
folded into an additive lift vector so the interior matrix stays
time-independent.

Node conventions
----------------
The full grid on (0,1)^d has indices 0..n+1 per axis with spacing
dx = 1/(n+1).  Interior nodes carry indices 1..n.  In 2D the flat index of
interior node (i, j) is (i-1)*n + (j-1), i.e. x-major.  Boundary nodes are
enumerated in lexicographic order of their full-grid multi-indices; 1D gives
[x=0, x=1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp


class UnsupportedFeatureError(NotImplementedError):
    """Requested a discretization feature outside the supported set."""


@dataclass(frozen=True)
class Mesh:
    """Uniform rectangular grid with interior-node indexing."""

    dim: int
    n_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n_per_axis < 3:
            raise ValueError("need at least 3 interior nodes per axis")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_per_axis + 1)

    @property
    def n_interior(self) -> int:
        return self.n_per_axis**self.dim

    def flat_index(self, i: int, j: int | None = None) -> int:
        n = self.n_per_axis
        if self.dim == 1:
            if not 1 <= i <= n:
                raise IndexError(i)
            return i - 1
        assert j is not None
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexError((i, j))
        return (i - 1) * n + (j - 1)

    def interior_points(self) -> np.ndarray:
        """Coordinates of interior nodes, shape (n_interior, dim)."""
        n, dx = self.n_per_axis, self.dx
        ax = dx * np.arange(1, n + 1)
        if self.dim == 1:
            return ax[:, None]
        x, y = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])

    def boundary_indices(self) -> list[tuple[int, ...]]:
        """Full-grid multi-indices of boundary nodes, lexicographic order."""
        n = self.n_per_axis
        if self.dim == 1:
            return [(0,), (n + 1,)]
        out = []
        for i in range(n + 2):
            for j in range(n + 2):
                if i in (0, n + 1) or j in (0, n + 1):
                    out.append((i, j))
        return out

    def boundary_points(self) -> np.ndarray:
        """Coordinates of boundary nodes in the fixed ordering."""
        idx = np.array(self.boundary_indices(), dtype=float)
        return idx * self.dx

    @property
    def n_boundary(self) -> int:
        n = self.n_per_axis
        return 2 if self.dim == 1 else 4 * (n + 1)


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition: Dirichlet trace data b(x).

    Robin/Neumann coefficient slots are reserved but not discretized.
    """

    value: Callable[..., float]
    kind: str = "dirichlet"
    beta: tuple | None = None
    gamma: Callable[..., float] | None = None

    def trace(self, mesh: Mesh) -> np.ndarray:
        return boundary_trace(mesh, self.value)


@dataclass(frozen=True)
class DiffusionCoefficients:
    """Coefficients of D = sum a_ij d_ij + sum b_i d_i + c I.

    `a` maps a point to the symmetric (d, d) matrix, `b` to the drift vector,
    `c` to the reaction scalar.  `is_laplacian` marks the pure-Laplacian case
    used by all experiments; it enables exact shortcuts elsewhere.
    """

    a: Callable[[np.ndarray], np.ndarray]
    b: Callable[[np.ndarray], np.ndarray] | None = None
    c: Callable[[np.ndarray], float] | None = None
    is_laplacian: bool = False

    @staticmethod
    def laplacian(dim: int) -> "DiffusionCoefficients":
        eye = np.eye(dim)
        return DiffusionCoefficients(a=lambda p: eye, is_laplacian=True)


@dataclass
class DiscreteOperator:
    """Sparse interior matrix L plus boundary machinery.

    (D u)|interior ~= L @ u_interior + g_b for u with the given Dirichlet
    trace.  `fold` maps a vector of boundary values to its stencil
    contribution, so g_b = fold @ trace(b).
    """

    L: sp.csr_matrix
    fold: sp.csr_matrix
    g_b: np.ndarray
    mesh: Mesh
    coeffs: DiffusionCoefficients
    bc: BoundarySpec
    _factor: object = field(default=None, repr=False, compare=False)

    def factorization(self):
        """Cached sparse LU of L (computed once per operator)."""
        if self._factor is None:
            import scipy.sparse.linalg as spla

            self._factor = spla.splu(sp.csc_matrix(self.L))
        return self._factor


@dataclass
class Field:
    """Complex-valued grid function on interior nodes."""

    values: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.mesh.n_interior,):
            raise ValueError(
                f"field length {self.values.shape} does not match mesh "
                f"interior count {self.mesh.n_interior}"
            )

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.mesh)


def sample(mesh: Mesh, fn: Callable[..., float]) -> Field:
    """Sample a scalar function of the coordinates onto interior nodes."""
    pts = mesh.interior_points()
    vals = np.array([fn(*p) for p in pts], dtype=complex)
    return Field(vals, mesh)


def l2_norm(v: Field) -> float:
    """Discrete L2 norm sqrt(dx^dim * sum |v_i|^2)."""
    dx = v.mesh.dx
    return float(np.sqrt(dx**v.mesh.dim * np.sum(np.abs(v.values) ** 2)))


def boundary_trace(mesh: Mesh, g: Callable[..., float]) -> np.ndarray:
    """Sample g at boundary nodes in the documented fixed ordering."""
    pts = mesh.boundary_points()
    return np.array([g(*p) for p in pts], dtype=float)


def assemble_operator(
    mesh: Mesh, coeffs: DiffusionCoefficients, bc: BoundarySpec
) -> DiscreteOperator:
    """Second-order central-difference assembly with Dirichlet row folding."""
    if bc.kind != "dirichlet":
        raise UnsupportedFeatureError(
            f"boundary kind {bc.kind!r} is not discretized; only Dirichlet is"
        )
    n, dx, dim = mesh.n_per_axis, mesh.dx, mesh.dim
    pts = mesh.interior_points()

    a_all = np.array([np.atleast_2d(coeffs.a(p)) for p in pts], dtype=float)
    eigmin = np.linalg.eigvalsh(a_all).min()
    if eigmin <= 0:
        raise ValueError(
            f"coefficients not uniformly elliptic: min eigenvalue {eigmin:g} <= 0"
        )
    drift = (
        np.array([coeffs.b(p) for p in pts], dtype=float)
        if coeffs.b is not None
        else None
    )
    react = (
        np.array([coeffs.c(p) for p in pts], dtype=float)
        if coeffs.c is not None
        else None
    )

    bidx = {t: k for k, t in enumerate(mesh.boundary_indices())}
    rows, cols, data = [], [], []
    frows, fcols, fdata = [], [], []

    def add(row: int, node: tuple[int, ...], coeff: float):
        interior = all(1 <= t <= n for t in node)
        if interior:
            rows.append(row)
            cols.append(mesh.flat_index(*node))
            data.append(coeff)
        else:
            frows.append(row)
            fcols.append(bidx[node])
            fdata.append(coeff)

    inv_dx2 = 1.0 / dx**2
    for k in range(mesh.n_interior):
        if dim == 1:
            node = (k + 1,)
        else:
            node = (k // n + 1, k % n + 1)
        A = a_all[k]
        for ax in range(dim):
            e = np.zeros(dim, dtype=int)
            e[ax] = 1
            coef = A[ax, ax] * inv_dx2
            add(k, tuple(np.array(node) + e), coef)
            add(k, tuple(np.array(node) - e), coef)
            add(k, node, -2.0 * coef)
        if dim == 2 and A[0, 1] != 0.0:
            # cross term: 2 a12 d_xy via the centered 4-point stencil
            coef = 2.0 * A[0, 1] / (4.0 * dx**2)
            i, j = node
            add(k, (i + 1, j + 1), coef)
            add(k, (i - 1, j - 1), coef)
            add(k, (i + 1, j - 1), -coef)
            add(k, (i - 1, j + 1), -coef)
        if drift is not None:
            for ax in range(dim):
                e = np.zeros(dim, dtype=int)
                e[ax] = 1
                coef = drift[k][ax] / (2.0 * dx)
                add(k, tuple(np.array(node) + e), coef)
                add(k, tuple(np.array(node) - e), -coef)
        if react is not None and react[k] != 0.0:
            add(k, node, react[k])

    N = mesh.n_interior
    L = sp.csr_matrix((data, (rows, cols)), shape=(N, N))
    fold = sp.csr_matrix((fdata, (frows, fcols)), shape=(N, mesh.n_boundary))
    g_b = fold @ bc.trace(mesh)
    return DiscreteOperator(L=L, fold=fold, g_b=g_b, mesh=mesh, coeffs=coeffs, bc=bc)
