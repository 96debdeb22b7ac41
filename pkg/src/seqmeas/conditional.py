"""Conditional measurement model: each probe is read out immediately.

Conditioning runs both ways. The recorded first outcome reshapes the
second pointer's distribution (causal backaction); conditioning on the
second outcome reshapes the statistics of the already-recorded first one
(noncausal backaction). Both conditional densities are Gaussian pair sums
in the free outcome, so their means and variances are closed-form;
numerical quadrature enters only as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, require_same_dim
from .errors import VarianceInconsistency, ZeroLikelihood
from .kraus import MeasurementStage, scaled_kraus_weights
from .pointer import GaussianPairSum

#: Extracted variances in [-EXTRACTED_CLAMP, 0) clamp to zero; below raises.
EXTRACTED_CLAMP = 1e-9


@dataclass(frozen=True)
class ConditionalStats:
    """Mean/variance of a conditional pointer density, plus the system part.

    ``extracted_system_variance`` is the pointer variance minus the shot
    noise ``sigma^2`` of the free stage; ``clamped`` flags a sub-roundoff
    negative value that was clipped to zero.
    """

    mean: float
    variance: float
    extracted_system_variance: float
    clamped: bool = False


@dataclass(frozen=True)
class ConditionalDensity:
    """Conditional outcome density as a normalized Gaussian pair sum.

    ``direction`` is ``"forward"`` (second outcome given the first) or
    ``"backward"`` (first outcome given the second); ``conditioned_on`` is
    the fixed outcome. The density is ``numerator.value(x) / normalization``.
    """

    direction: str
    conditioned_on: float
    numerator: GaussianPairSum
    normalization: float

    def pdf(self, x):
        return self.numerator.value(x) / self.normalization


def pair_sum_stats(numerator: GaussianPairSum, sigma_free: float) -> ConditionalStats:
    """Moments of a shared-sigma pair sum, with the shot noise split off.

    The second moment of every term carries the same additive ``sigma^2``,
    so the extracted part is computed from the center spread alone instead
    of subtracting ``sigma^2`` from a possibly huge total variance.
    """
    m0 = numerator.moment(0)
    if not np.isfinite(m0) or m0 < 1e-300:
        raise ZeroLikelihood(f"density normalization {m0!r} too small")
    mean = numerator.moment(1) / m0
    extracted = numerator.center_second_moment() / m0 - mean * mean
    clamped = False
    if extracted < 0.0:
        if extracted < -EXTRACTED_CLAMP:
            raise VarianceInconsistency(
                f"extracted variance {extracted:.3e} below -{EXTRACTED_CLAMP:.0e}"
            )
        extracted = 0.0
        clamped = True
    return ConditionalStats(
        mean=float(mean),
        variance=float(extracted + sigma_free * sigma_free),
        extracted_system_variance=float(extracted),
        clamped=clamped,
    )


def conditional_state(
    rho0: DensityMatrix, stage1: MeasurementStage, x1: float
) -> DensityMatrix:
    """Unnormalized post-measurement state ``M_x1 rho0 M_x1^dagger``.

    The physical trace equals the marginal likelihood of the outcome; it is
    carried as a log-scale prefactor so conditioning far into the Gaussian
    tails stays finite.
    """
    obs = stage1.observable
    require_same_dim(obs.dim, rho0.dim)
    if not np.isfinite(x1):
        raise ValueError(f"outcome must be finite, got {x1!r}")
    weights, log_w = scaled_kraus_weights(stage1, x1)
    kraus = np.einsum("g,gij->ij", weights, obs.projectors)
    matrix = kraus @ rho0.matrix @ kraus
    return DensityMatrix(matrix, log_scale=rho0.log_scale + 2.0 * log_w)


def _level_weights(obs, rho: DensityMatrix) -> np.ndarray:
    w = np.einsum("gij,ji->g", obs.projectors, rho.matrix).real
    return np.clip(w, 0.0, None)


def marginal_density_x1(rho0: DensityMatrix, stage1: MeasurementStage) -> GaussianPairSum:
    """Unconditional density of the first outcome: a plain Gaussian mixture."""
    weights = _level_weights(stage1.observable, rho0)
    return GaussianPairSum.mixture(weights, stage1.observable.levels, stage1.sigma)


def forward_density(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x1: float,
) -> ConditionalDensity:
    """Density of the second outcome given the first: ``p(x2 | x1)``.

    A proper Gaussian mixture over the second observable's levels, weighted
    by the normalized conditional state.

    Raises
    ------
    ZeroLikelihood
        If the conditioning outcome has vanishing marginal likelihood.
    """
    require_same_dim(stage1.dim, stage2.dim, rho0.dim)
    rho_hat = conditional_state(rho0, stage1, x1).normalized()
    weights = _level_weights(stage2.observable, rho_hat)
    numerator = GaussianPairSum.mixture(weights, stage2.observable.levels, stage2.sigma)
    return ConditionalDensity(
        direction="forward",
        conditioned_on=float(x1),
        numerator=numerator,
        normalization=numerator.moment(0),
    )


def forward_stats(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x1: float,
) -> ConditionalStats:
    """Conditional mean/variance of the second outcome given the first.

    The extracted part is the variance of the second observable conditioned
    on the first measurement's presence and outcome.
    """
    density = forward_density(rho0, stage1, stage2, x1)
    return pair_sum_stats(density.numerator, stage2.sigma)


def _scaled_effect_weights(stage: MeasurementStage, x: float) -> np.ndarray:
    # effect weights |psi(x - b)|^2 rescaled so the largest is one; the
    # dropped prefactor cancels in every conditional ratio
    logs = 2.0 * np.asarray(
        [-((x - b) ** 2) / (4.0 * stage.sigma**2) for b in stage.observable.levels]
    )
    return np.exp(logs - logs.max())


def backward_numerator(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x2: float,
) -> GaussianPairSum:
    """Pair sum over ``x1`` proportional to ``Tr[rho_bar_1(x1) E(x2)]``.

    Coefficients are Hadamard products of the initial state and the effect
    operator in the first observable's eigenbasis, hence Hermitian and
    positive semidefinite as a matrix (Schur product of PSD factors).
    """
    obs1 = stage1.observable
    v = obs1.eigenvectors
    effect_weights = _scaled_effect_weights(stage2, x2)
    effect = np.einsum("g,gij->ij", effect_weights, stage2.observable.projectors)
    rho_in_a = v.conj().T @ rho0.matrix @ v
    effect_in_a = v.conj().T @ effect @ v
    coeffs = rho_in_a * effect_in_a.T
    lam = obs1.eigenvalues
    grid_a, grid_b = np.meshgrid(lam, lam, indexing="ij")
    return GaussianPairSum(
        coeffs.ravel(), grid_a.ravel(), grid_b.ravel(), stage1.sigma
    )


def backward_density(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x2: float,
) -> ConditionalDensity:
    """Density of the first outcome given the second: ``p(x1 | x2)``."""
    require_same_dim(stage1.dim, stage2.dim, rho0.dim)
    if not np.isfinite(x2):
        raise ValueError(f"outcome must be finite, got {x2!r}")
    numerator = backward_numerator(rho0, stage1, stage2, x2)
    norm = numerator.moment(0)
    if not np.isfinite(norm) or norm < 1e-300:
        raise ZeroLikelihood(f"backward normalization {norm!r} too small")
    return ConditionalDensity(
        direction="backward",
        conditioned_on=float(x2),
        numerator=numerator,
        normalization=norm,
    )


def backward_stats(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x2: float,
) -> ConditionalStats:
    """Conditional mean/variance of the first outcome given the second."""
    density = backward_density(rho0, stage1, stage2, x2)
    return pair_sum_stats(density.numerator, stage1.sigma)
