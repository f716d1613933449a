"""Scheme compositions, bookkeeping, and one-step closed-form cross-checks."""

import numpy as np
import pytest

from splitc3 import analysis
from splitc3.flows import ComplexCoeffs, IndependentSource, LogisticSource
from splitc3.mesh import (
    BoundarySpec,
    DiffusionCoefficients,
    Field,
    Mesh,
    assemble_operator,
    sample,
)
from splitc3.schemes import (
    ConfigurationError,
    Context,
    SchemeId,
    StepStats,
    integrate,
    step_c3_naiv,
    step_c3_new,
    step_strang_corr,
    step_strang_naiv,
)

BC0 = BoundarySpec(value=lambda *p: 0.0)


def _context(n=100, fn=None, d_fn=None):
    mesh = Mesh(dim=1, n_per_axis=n)
    op = assemble_operator(mesh, DiffusionCoefficients.laplacian(1), BC0)
    src = IndependentSource(fn or (lambda x: np.cos(2 * np.pi * x)), d_fn)
    return Context(mesh=mesh, op=op, source=src, bc=BC0)


def test_scheme_parse():
    assert SchemeId.parse("c3new") is SchemeId.C3_NEW
    assert SchemeId.parse("StrangNaiv") is SchemeId.STRANG_NAIV
    with pytest.raises(ConfigurationError, match="valid"):
        SchemeId.parse("nope")


def test_integrate_rejects_non_integer_step_count():
    ctx = _context(20)
    u0 = sample(ctx.mesh, lambda x: np.sin(np.pi * x))
    with pytest.raises(ConfigurationError):
        integrate(SchemeId.STRANG_NAIV, u0, 0.03, 0.1, ctx)
    with pytest.raises(ConfigurationError):
        integrate(SchemeId.STRANG_NAIV, u0, -0.01, 0.1, ctx)


def test_stats_per_step_invariants():
    ctx = _context(30)
    u0 = sample(ctx.mesh, lambda x: np.sin(np.pi * x))
    _, st = integrate(SchemeId.STRANG_NAIV, u0, 0.01, 0.05, ctx)
    assert (st.n_steps, st.n_diffusion_flows, st.n_source_flows) == (5, 5, 10)
    ctx = _context(30)
    _, st = integrate(SchemeId.C3_NAIV, u0, 0.01, 0.05, ctx)
    assert (st.n_diffusion_flows, st.n_source_flows) == (10, 15)
    ctx = _context(30)
    _, st = integrate(SchemeId.C3_NEW, u0, 0.01, 0.05, ctx)
    assert (st.n_diffusion_flows, st.n_source_flows, st.n_corrector_flows) == (10, 15, 20)
    # independent source: the corrector pair is computed once for the whole run
    assert st.n_corrector_solves == 2


def test_one_step_fd_crosscheck_c3_new():
    """step_c3_new matches the one-step closed form in the discrete sine
    eigenbasis to 1e-10 relative (n = 100)."""
    n = 100
    ctx = _context(n)
    tau = 0.02
    u0 = sample(ctx.mesh, lambda x: np.sin(2 * np.pi * x))
    u1 = step_c3_new(u0, tau, ctx)
    pair = ctx.corrector(u0, ComplexCoeffs().a * tau, 1, StepStats())
    p = analysis.SpectralProblem.discrete_fd(n)
    uc = analysis.to_sine_coeffs(u0.values)
    fc = analysis.to_sine_coeffs(ctx.source.values(ctx.mesh).values)
    qc = analysis.to_sine_coeffs(pair.q.values)
    pred = analysis.from_sine_coeffs(analysis.spectral_scheme_step(p, uc, fc, qc, tau))
    rel = np.linalg.norm(u1.values - pred) / np.linalg.norm(pred)
    assert rel <= 1e-10


def test_one_step_fd_crosscheck_c3_naiv():
    """step_c3_naiv equals the same closed form with q = 0."""
    n = 100
    ctx = _context(n)
    tau = 0.02
    u0 = sample(ctx.mesh, lambda x: np.sin(2 * np.pi * x))
    u1 = step_c3_naiv(u0, tau, ctx)
    p = analysis.SpectralProblem.discrete_fd(n)
    uc = analysis.to_sine_coeffs(u0.values)
    fc = analysis.to_sine_coeffs(ctx.source.values(ctx.mesh).values)
    pred = analysis.from_sine_coeffs(
        analysis.spectral_scheme_step(p, uc, fc, np.zeros(n), tau)
    )
    rel = np.linalg.norm(u1.values - pred) / np.linalg.norm(pred)
    assert rel <= 1e-10


def test_zeroed_correctors_degrade_to_naive():
    """With correctors forced to zero, C3New reduces to C3Naiv and
    StrangCorr to StrangNaiv (flow-by-flow identity)."""
    ctx = _context(60)
    ctx.zero_correctors = True
    u0 = sample(ctx.mesh, lambda x: np.sin(2 * np.pi * x))
    tau = 0.01
    a = step_c3_new(u0, tau, ctx)
    b = step_c3_naiv(u0, tau, ctx)
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-12)
    c = step_strang_corr(u0, tau, ctx)
    d = step_strang_naiv(u0, tau, ctx)
    np.testing.assert_allclose(c.values, d.values, rtol=0, atol=1e-12)


def test_equilibrium_preserved_by_all_schemes():
    """u = 1 with b = 1 is a steady state of the Fisher problem; every
    scheme (correctors included) must keep it fixed."""
    n = 20
    mesh = Mesh(dim=2, n_per_axis=n)
    bc = BoundarySpec(value=lambda x, y: 1.0)
    op = assemble_operator(mesh, DiffusionCoefficients.laplacian(2), bc)
    src = LogisticSource(M=1.0)
    u0 = Field(np.ones(mesh.n_interior), mesh)
    for step in (step_strang_naiv, step_strang_corr, step_c3_naiv, step_c3_new):
        ctx = Context(mesh=mesh, op=op, source=src, bc=bc)
        u1 = step(u0, 0.01, ctx)
        np.testing.assert_allclose(u1.values, 1.0, rtol=0, atol=1e-10, err_msg=step.__name__)


def test_independent_corrector_cached_across_steps():
    ctx = _context(40, fn=lambda x: np.cos(2 * np.pi * x), d_fn=lambda x: -4 * np.pi**2 * np.cos(2 * np.pi * x))
    u0 = sample(ctx.mesh, lambda x: np.sin(np.pi * x))
    _, st = integrate(SchemeId.C3_NEW, u0, 0.005, 0.05, ctx)
    assert st.n_steps == 10
    assert st.n_corrector_solves == 2  # not 4 per step


def test_strang_corr_beats_strang_naiv_for_cos():
    """For f not vanishing on the boundary the projection corrector must
    reduce the one-step defect against the exact affine solution."""
    from splitc3.expmv import ExpmvConfig, expmv_affine

    n = 200
    ctx = _context(n)
    tau = 0.01
    u0 = sample(ctx.mesh, lambda x: np.sin(2 * np.pi * x))
    exact = expmv_affine(
        tau, ctx.op, ctx.op.g_b + ctx.source.values(ctx.mesh).values.real, u0, ExpmvConfig()
    )
    e_naiv = np.linalg.norm(step_strang_naiv(u0, tau, ctx).values - exact.values)
    e_corr = np.linalg.norm(step_strang_corr(u0, tau, ctx).values - exact.values)
    assert e_corr < e_naiv / 3


def test_complex_state_no_real_projection():
    """Intermediate C3 states are genuinely complex; the final integrate
    output keeps its (small) imaginary part rather than discarding it."""
    ctx = _context(50)
    u0 = sample(ctx.mesh, lambda x: np.sin(2 * np.pi * x))
    u_mid = step_c3_naiv(u0, 0.02, ctx)
    assert np.iscomplexobj(u_mid.values)
    assert np.max(np.abs(u_mid.values.imag)) > 0
