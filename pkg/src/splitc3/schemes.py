"""The four splitting integrators and the time-stepping loop."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .correctors import CorrectorPair, build_corrector, build_projection_corrector
from .expmv import ExpmvConfig
from .flows import ComplexCoeffs, IndependentSource, SourceTerm, corrector_flow, diffusion_flow, source_flow
from .mesh import BoundarySpec, DiscreteOperator, Field, Mesh


class ConfigurationError(ValueError):
    pass


class SchemeId(enum.Enum):
    STRANG_NAIV = "StrangNaiv"
    STRANG_CORR = "StrangCorr"
    C3_NAIV = "C3Naiv"
    C3_NEW = "C3New"

    @classmethod
    def parse(cls, name: str) -> "SchemeId":
        for s in cls:
            if s.value.lower() == name.lower():
                return s
        raise ConfigurationError(
            f"unknown scheme {name!r}; valid: {[s.value for s in cls]}"
        )


@dataclass
class StepStats:
    n_diffusion_flows: int = 0
    n_source_flows: int = 0
    n_corrector_flows: int = 0
    n_corrector_solves: int = 0
    n_steps: int = 0


@dataclass
class Context:
    """Immutable problem bundle shared by all steps of an integration."""

    mesh: Mesh
    op: DiscreteOperator
    source: SourceTerm
    bc: BoundarySpec
    coeffs: ComplexCoeffs = field(default_factory=ComplexCoeffs)
    expmv_cfg: ExpmvConfig = field(default_factory=ExpmvConfig)
    zero_correctors: bool = False  # diagnostic: degrade corrected schemes
    _cache: dict = field(default_factory=dict, repr=False)

    def corrector(
        self, omega: Field, tau_j: complex, block: int, stats: StepStats
    ) -> CorrectorPair:
        if self.zero_correctors:
            zero = Field(np.zeros(self.mesh.n_interior, dtype=complex), self.mesh)
            return CorrectorPair(q=zero, r=zero, tau_j=tau_j, block=block)
        if isinstance(self.source, IndependentSource):
            # state- and n-independent: compute once, reuse for both blocks
            pair = self._cache.get("independent")
            if pair is None:
                pair = build_corrector(
                    self.source, omega, self.bc, tau_j, self.op, self.mesh, block
                )
                stats.n_corrector_solves += 2
                self._cache["independent"] = pair
            return pair
        stats.n_corrector_solves += 2
        return build_corrector(
            self.source, omega, self.bc, tau_j, self.op, self.mesh, block
        )

    def strang_corrector(self, omega: Field, tau_j: complex, stats: StepStats) -> Field:
        if self.zero_correctors:
            return Field(np.zeros(self.mesh.n_interior, dtype=complex), self.mesh)
        if isinstance(self.source, IndependentSource):
            q = self._cache.get("strang")
            if q is None:
                q = build_projection_corrector(
                    self.source, omega, self.bc, tau_j, self.op, self.mesh
                )
                stats.n_corrector_solves += 1
                self._cache["strang"] = q
            return q
        stats.n_corrector_solves += 1
        return build_projection_corrector(
            self.source, omega, self.bc, tau_j, self.op, self.mesh
        )


def step_strang_naiv(u: Field, tau: float, ctx: Context, stats: StepStats | None = None) -> Field:
    stats = stats if stats is not None else StepStats()
    u = source_flow(ctx.source, tau / 2, u)
    u = diffusion_flow(ctx.op, None, tau, u, ctx.expmv_cfg)
    u = source_flow(ctx.source, tau / 2, u)
    stats.n_source_flows += 2
    stats.n_diffusion_flows += 1
    return u


def step_strang_corr(u: Field, tau: float, ctx: Context, stats: StepStats | None = None) -> Field:
    stats = stats if stats is not None else StepStats()
    q = ctx.strang_corrector(u, tau / 2, stats)
    u = source_flow(ctx.source, tau / 2, u)
    u = corrector_flow(q, tau / 2, u)
    u = diffusion_flow(ctx.op, q, tau, u, ctx.expmv_cfg)
    u = corrector_flow(q, tau / 2, u)
    u = source_flow(ctx.source, tau / 2, u)
    stats.n_source_flows += 2
    stats.n_diffusion_flows += 1
    stats.n_corrector_flows += 2
    return u


def step_c3_naiv(u: Field, tau: float, ctx: Context, stats: StepStats | None = None) -> Field:
    stats = stats if stats is not None else StepStats()
    a, c = ctx.coeffs.a, ctx.coeffs.c
    abar = ctx.coeffs.abar
    u = source_flow(ctx.source, a * tau, u)
    u = diffusion_flow(ctx.op, None, 2 * a * tau, u, ctx.expmv_cfg)
    u = source_flow(ctx.source, c * tau, u)
    u = diffusion_flow(ctx.op, None, 2 * abar * tau, u, ctx.expmv_cfg)
    u = source_flow(ctx.source, abar * tau, u)
    stats.n_source_flows += 3
    stats.n_diffusion_flows += 2
    return u


def step_c3_new(u: Field, tau: float, ctx: Context, stats: StepStats | None = None) -> Field:
    stats = stats if stats is not None else StepStats()
    a, c = ctx.coeffs.a, ctx.coeffs.c
    abar = ctx.coeffs.abar

    # first corrected Strang block over the complex substep 2 a tau
    pair1 = ctx.corrector(u, a * tau, block=1, stats=stats)
    u = source_flow(ctx.source, a * tau, u)
    u = corrector_flow(pair1.q, a * tau, u)
    u = diffusion_flow(ctx.op, pair1.q, 2 * a * tau, u, ctx.expmv_cfg)
    u = corrector_flow(pair1.q, a * tau, u)
    u = source_flow(ctx.source, c * tau, u)

    # second block's entry state is recorded after the middle source flow
    pair2 = ctx.corrector(u, abar * tau, block=2, stats=stats)
    u = corrector_flow(pair2.q, abar * tau, u)
    u = diffusion_flow(ctx.op, pair2.q, 2 * abar * tau, u, ctx.expmv_cfg)
    u = corrector_flow(pair2.q, abar * tau, u)
    u = source_flow(ctx.source, abar * tau, u)

    stats.n_source_flows += 3
    stats.n_diffusion_flows += 2
    stats.n_corrector_flows += 4
    return u


_STEPPERS = {
    SchemeId.STRANG_NAIV: step_strang_naiv,
    SchemeId.STRANG_CORR: step_strang_corr,
    SchemeId.C3_NAIV: step_c3_naiv,
    SchemeId.C3_NEW: step_c3_new,
}


def integrate(
    scheme: SchemeId, u0: Field, tau: float, T: float, ctx: Context
) -> tuple[Field, StepStats]:
    if tau <= 0 or T < 0:
        raise ConfigurationError("tau must be positive and T nonnegative")
    n_steps = round(T / tau)
    if n_steps == 0 or abs(n_steps * tau - T) > 4 * np.finfo(float).eps * max(T, 1.0):
        raise ConfigurationError(f"T/tau = {T / tau!r} is not an integer step count")
    step = _STEPPERS[scheme]
    stats = StepStats()
    u = u0.copy()
    for _ in range(n_steps):
        u = step(u, tau, ctx, stats)
        stats.n_steps += 1
    return u, stats
