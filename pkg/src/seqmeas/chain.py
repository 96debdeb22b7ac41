"""General N-stage sequential measurement engine.

A chain applies its stages in order; a query fixes every outcome except
one and asks for the density, mean and variance of the free one. The
density of outcome ``k`` conditioned on all others is built from the
chain state of the earlier stages and the effect product of the later
ones; for N = 2 it reduces exactly to the two-stage conditional model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conditional import ConditionalStats, pair_sum_stats
from .core import DensityMatrix
from .errors import DimensionMismatch, ZeroLikelihood
from .kraus import EffectOperator, MeasurementStage, scaled_kraus_weights
from .pointer import GaussianPairSum

#: Fixed outcomes farther than this many sigmas from every eigenvalue abort
#: a query instead of producing denormal likelihoods.
OUTCOME_SIGMA_CUTOFF = 12.0


@dataclass(frozen=True)
class MeasurementChain:
    """Ordered measurement stages applied to one initial state."""

    stages: tuple[MeasurementStage, ...]
    initial_state: DensityMatrix

    def __post_init__(self):
        stages = tuple(self.stages)
        if len(stages) < 1:
            raise ValueError("a chain needs at least one stage")
        dims = {s.dim for s in stages} | {self.initial_state.dim}
        if len(dims) != 1:
            raise DimensionMismatch(f"stage/state dimensions disagree: {sorted(dims)}")
        object.__setattr__(self, "stages", stages)

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def dim(self) -> int:
        return self.initial_state.dim


@dataclass(frozen=True)
class ChainQuery:
    """One free outcome index (1-based) plus fixed outcomes for all others.

    ``fixed_outcomes`` lists the outcomes of the non-free stages in stage
    order; a chain of N stages takes N - 1 of them.
    """

    free_index: int
    fixed_outcomes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "fixed_outcomes", tuple(float(x) for x in self.fixed_outcomes))
        if not all(np.isfinite(self.fixed_outcomes)):
            raise ValueError("fixed outcomes must be finite")

    def validate_for(self, chain: MeasurementChain) -> None:
        n = len(chain)
        if not 1 <= self.free_index <= n:
            raise ValueError(f"free index {self.free_index} outside 1..{n}")
        if len(self.fixed_outcomes) != n - 1:
            raise ValueError(
                f"{n}-stage chain needs {n - 1} fixed outcomes, got {len(self.fixed_outcomes)}"
            )

    def outcomes_before(self) -> tuple[float, ...]:
        return self.fixed_outcomes[: self.free_index - 1]

    def outcomes_after(self) -> tuple[float, ...]:
        return self.fixed_outcomes[self.free_index - 1 :]


@dataclass(frozen=True)
class ChainResult:
    """Conditional density and moments of the free outcome of a query."""

    density: GaussianPairSum
    normalization: float
    mean: float
    variance: float
    extracted_variance: float
    clamped: bool = False


def chain_state(chain: MeasurementChain, outcomes: Sequence[float]) -> DensityMatrix:
    """Unnormalized state after the first ``len(outcomes)`` stages.

    Left-fold of the Kraus operators at the given outcomes; the physical
    trace is the joint likelihood of those outcomes, tracked as a log-scale
    prefactor.
    """
    if len(outcomes) > len(chain):
        raise ValueError(f"{len(outcomes)} outcomes for a {len(chain)}-stage chain")
    matrix = chain.initial_state.matrix
    log_scale = chain.initial_state.log_scale
    for stage, x in zip(chain.stages, outcomes):
        weights, log_w = scaled_kraus_weights(stage, float(x))
        kraus = np.einsum("g,gij->ij", weights, stage.observable.projectors)
        matrix = kraus @ matrix @ kraus
        log_scale += 2.0 * log_w
    return DensityMatrix(matrix, log_scale=log_scale)


def effect_chain(chain: MeasurementChain, outcomes: Sequence[float]) -> EffectOperator:
    """Effect product of the last ``len(outcomes)`` stages at fixed outcomes.

    Builds ``Omega_{k+1}^dagger ... Omega_N^dagger Omega_N ... Omega_{k+1}``
    from the inside out; an empty outcome list gives the identity.
    """
    n_fixed = len(outcomes)
    if n_fixed > len(chain):
        raise ValueError(f"{n_fixed} outcomes for a {len(chain)}-stage chain")
    matrix = np.eye(chain.dim, dtype=complex)
    log_scale = 0.0
    for stage, x in zip(reversed(chain.stages[len(chain) - n_fixed :]), reversed(list(outcomes))):
        weights, log_w = scaled_kraus_weights(stage, float(x))
        kraus = np.einsum("g,gij->ij", weights, stage.observable.projectors)
        matrix = kraus @ matrix @ kraus
        log_scale += 2.0 * log_w
    return EffectOperator(matrix=matrix, outcomes=tuple(float(x) for x in outcomes), log_scale=log_scale)


def _check_outcome_reach(chain: MeasurementChain, query: ChainQuery) -> None:
    fixed = iter(query.fixed_outcomes)
    for j, stage in enumerate(chain.stages, start=1):
        if j == query.free_index:
            continue
        x = next(fixed)
        gap = float(np.min(np.abs(x - stage.observable.levels)))
        if gap > OUTCOME_SIGMA_CUTOFF * stage.sigma:
            raise ZeroLikelihood(
                f"outcome {x!r} of stage {j} lies {gap / stage.sigma:.1f} sigma from "
                f"every eigenvalue (cutoff {OUTCOME_SIGMA_CUTOFF})"
            )


def conditional_numerator(
    chain: MeasurementChain, query: ChainQuery
) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficient matrix, pair centers and sigma of the conditional density.

    In the free stage's (full) eigenbasis the coefficients are the Hadamard
    product of the pre-stage chain state and the transposed effect product,
    so the matrix is Hermitian PSD and the pair sum it induces is a
    nonnegative density.
    """
    query.validate_for(chain)
    _check_outcome_reach(chain, query)
    free_stage = chain.stages[query.free_index - 1]
    rho_before = chain_state(chain, query.outcomes_before())
    effect = effect_chain(chain, query.outcomes_after())
    v = free_stage.observable.eigenvectors
    rho_in_basis = v.conj().T @ rho_before.matrix @ v
    effect_in_basis = v.conj().T @ effect.matrix @ v
    coeffs = rho_in_basis * effect_in_basis.T
    return coeffs, free_stage.observable.eigenvalues, free_stage.sigma


def conditional_density_k(
    chain: MeasurementChain, query: ChainQuery
) -> tuple[GaussianPairSum, float]:
    """Density of the free outcome conditioned on all fixed ones.

    Returns the unnormalized Gaussian pair sum and its normalization
    (zeroth moment); the density is their ratio.
    """
    coeffs, centers, sigma = conditional_numerator(chain, query)
    grid_a, grid_b = np.meshgrid(centers, centers, indexing="ij")
    density = GaussianPairSum(coeffs.ravel(), grid_a.ravel(), grid_b.ravel(), sigma)
    norm = density.moment(0)
    if not np.isfinite(norm) or norm < 1e-300:
        raise ZeroLikelihood(f"conditional normalization {norm!r} too small")
    return density, norm


def conditional_stats_k(chain: MeasurementChain, query: ChainQuery) -> ChainResult:
    """Mean, variance and extracted variance of the free outcome."""
    density, norm = conditional_density_k(chain, query)
    sigma = chain.stages[query.free_index - 1].sigma
    stats: ConditionalStats = pair_sum_stats(density, sigma)
    return ChainResult(
        density=density,
        normalization=norm,
        mean=stats.mean,
        variance=stats.variance,
        extracted_variance=stats.extracted_system_variance,
        clamped=stats.clamped,
    )


def joint_outcome_likelihood(chain: MeasurementChain, outcomes: Sequence[float]) -> float:
    """Joint density value of a full outcome record (may underflow to 0.0)."""
    if len(outcomes) != len(chain):
        raise ValueError("need one outcome per stage")
    return chain_state(chain, outcomes).trace
