"""Corrector pairs via chained elliptic solves."""

import numpy as np
import pytest

from splitc3.correctors import (
    EllipticSolveError,
    build_corrector,
    build_projection_corrector,
    eval_D_boundary,
    solve_elliptic,
)
from splitc3.flows import ComplexCoeffs, IndependentSource, LogisticSource
from splitc3.mesh import (
    BoundarySpec,
    DiffusionCoefficients,
    Field,
    Mesh,
    assemble_operator,
    sample,
)

BC0 = BoundarySpec(value=lambda *p: 0.0)


def _setup(n=100, dim=1, bc=BC0):
    mesh = Mesh(dim=dim, n_per_axis=n)
    op = assemble_operator(mesh, DiffusionCoefficients.laplacian(dim), bc)
    return mesh, op


def test_solve_elliptic_residual_contract():
    mesh, op = _setup(60)
    rng = np.random.default_rng(0)
    rhs = rng.standard_normal(60) + 1j * rng.standard_normal(60)
    bvals = np.array([1.0 + 2j, -0.5])
    v = solve_elliptic(op, rhs, bvals)
    resid = np.linalg.norm(op.L @ v.values + op.fold @ bvals - rhs)
    assert resid <= 1e-10 * max(np.linalg.norm(rhs), 1.0)


def test_solve_elliptic_poisson_closed_form():
    # [DERIVED] -u'' = 1, u(0)=u(1)=0  ->  u = x(1-x)/2; discrete solve is exact
    mesh, op = _setup(50)
    x = mesh.interior_points()[:, 0]
    v = solve_elliptic(op, -np.ones(50), np.zeros(2))
    np.testing.assert_allclose(v.values.real, x * (1 - x) / 2, rtol=0, atol=1e-12)


def test_eval_D_boundary_exact_on_cubics_1d():
    """One-sided (2,-5,4,-1)/dx^2 stencil is exact for polynomials of degree 3."""
    mesh, op = _setup(20)
    poly = lambda x: 1 + 2 * x - 3 * x**2 + 0.5 * x**3
    d2 = lambda x: -6.0 + 3.0 * x
    interior = sample(mesh, poly).values
    boundary = np.array([poly(0.0), poly(1.0)], dtype=complex)
    out = eval_D_boundary(mesh, op, interior, boundary)
    np.testing.assert_allclose(out.real, [d2(0.0), d2(1.0)], rtol=0, atol=1e-9)


def test_eval_D_boundary_second_order_1d():
    """For f = x^4 the one-sided stencil error is exactly (11/12) f'''' dx^2,
    so the observed rate is 2 without transient."""
    for n in (20, 40):
        mesh, op = _setup(n)
        f = lambda x: x**4
        interior = sample(mesh, f).values
        boundary = np.array([f(0.0), f(1.0)], dtype=complex)
        out = eval_D_boundary(mesh, op, interior, boundary)
        err = np.abs(out.real - [0.0, 12.0])
        expected = 11.0 / 12.0 * 24.0 * mesh.dx**2
        np.testing.assert_allclose(err, expected, rtol=1e-8)


def test_eval_D_boundary_2d_with_corners():
    """2D Laplacian on the boundary, corners included, exact for quadratics."""
    mesh, op = _setup(12, dim=2)
    f = lambda x, y: x**2 - 2 * y**2 + x * y + x + 3
    lap = -2.0  # 2 - 4
    interior = sample(mesh, f).values
    boundary = np.array([f(*p) for p in mesh.boundary_points()], dtype=complex)
    out = eval_D_boundary(mesh, op, interior, boundary)
    np.testing.assert_allclose(out.real, lap, rtol=0, atol=1e-8)


def test_corrector_closed_form_cos():
    """[DERIVED] f = cos(2 pi x): q solves D^2 q = 0, Bq = f, B(Dq) = Df
    with closed form q(x) = 1 + 2 pi^2 x (1 - x)."""
    mesh, op = _setup(100)
    src = IndependentSource(
        lambda x: np.cos(2 * np.pi * x), lambda x: -4 * np.pi**2 * np.cos(2 * np.pi * x)
    )
    u = sample(mesh, lambda x: 0.0)
    pair = build_corrector(src, u, BC0, 0.25 * 0.02, op, mesh)
    x = mesh.interior_points()[:, 0]
    np.testing.assert_allclose(
        pair.q.values.real, 1.0 + 2 * np.pi**2 * x * (1 - x), rtol=0, atol=1e-10
    )
    # r = Dq = -4 pi^2 (harmonic extension of Df's trace is the constant)
    np.testing.assert_allclose(pair.r.values.real, -4 * np.pi**2, rtol=0, atol=1e-9)


def test_corrector_vanishes_for_sin():
    """f = sin(2 pi x) and Df vanish on the boundary: q = r = 0."""
    mesh, op = _setup(100)
    src = IndependentSource(
        lambda x: np.sin(2 * np.pi * x), lambda x: -4 * np.pi**2 * np.sin(2 * np.pi * x)
    )
    u = sample(mesh, lambda x: 0.0)
    pair = build_corrector(src, u, BC0, 0.01, op, mesh)
    assert np.max(np.abs(pair.q.values)) < 1e-10
    assert np.max(np.abs(pair.r.values)) < 1e-10


def test_discrete_harmonicity_of_r():
    """L r + fold(trace of r) = 0 to direct-solve accuracy."""
    mesh, op = _setup(80)
    src = IndependentSource(
        lambda x: np.cos(2 * np.pi * x), lambda x: -4 * np.pi**2 * np.cos(2 * np.pi * x)
    )
    pair = build_corrector(src, sample(mesh, lambda x: 0.0), BC0, 0.01, op, mesh)
    trace = np.array([src.d_fn(*p) for p in mesh.boundary_points()], dtype=complex)
    resid = np.linalg.norm(op.L @ pair.r.values + op.fold @ trace)
    assert resid <= 1e-10 * max(np.linalg.norm(op.fold @ trace), 1.0)


def test_nonlinear_corrector_boundary_data():
    """For the logistic source with b = 1/2 the d-field boundary value is
    (phi^f_t(1/2) - 1/2)/t, and q's trace matches it discretely."""
    n = 20
    mesh = Mesh(dim=2, n_per_axis=n)
    bc = BoundarySpec(value=lambda x, y: 0.5)
    op = assemble_operator(mesh, DiffusionCoefficients.laplacian(2), bc)
    src = LogisticSource(M=1.0)
    u = sample(mesh, lambda x, y: 0.5 + 0.1 * np.sin(np.pi * x) * np.sin(np.pi * y))
    tau_j = (0.25 - 0.1j) * 0.01
    pair = build_corrector(src, u, bc, tau_j, op, mesh)
    expected_trace = (src.flow_values(tau_j, np.array([0.5 + 0j])) - 0.5) / tau_j
    # q solves Dq = r with Bq = that trace; check the PDE residual with it
    trace = np.full(mesh.n_boundary, expected_trace[0])
    resid = np.linalg.norm(op.L @ pair.q.values + op.fold @ trace - pair.r.values)
    assert resid <= 1e-9 * max(np.linalg.norm(pair.r.values), 1.0)


def test_projection_corrector_harmonic_with_f_trace():
    """Strang projection corrector: D q = 0, B q = f on the boundary."""
    mesh, op = _setup(60)
    src = IndependentSource(lambda x: np.cos(2 * np.pi * x))
    q = build_projection_corrector(src, sample(mesh, lambda x: 0.0), BC0, 0.01, op, mesh)
    # 1D harmonic with q(0) = q(1) = 1 is the constant 1
    np.testing.assert_allclose(q.values.real, 1.0, rtol=0, atol=1e-11)


def test_pair_records_block_and_step():
    mesh, op = _setup(30)
    src = IndependentSource(lambda x: np.cos(2 * np.pi * x))
    tau_j = ComplexCoeffs().a * 0.02
    pair = build_corrector(src, sample(mesh, lambda x: 0.0), BC0, tau_j, op, mesh, block=2)
    assert pair.block == 2
    assert pair.tau_j == tau_j
