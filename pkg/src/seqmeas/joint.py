"""Joint measurement model: both probes couple first, readout afterwards.

Only the first measurement disturbs the second here. The first pointer's
statistics are those of the initial state; the second pointer sees the
dephased post-first-measurement state, which widens its variance by the
backaction term. The entangled two-probe state is never materialized:
both pointer variances come from closed forms, with quadrature and Monte
Carlo oracles available as independent checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, Observable, require_same_dim, variance_of
from .kraus import MeasurementStage


@dataclass(frozen=True)
class JointModelResult:
    """Bundle of joint-model statistics for one (state, stage1, stage2) triple."""

    rho1: DensityMatrix
    var_x1: float
    var_x2: float
    var_a_rho0: float
    var_b_rho1: float
    var_b_rho0: float


def post_first_state(rho0: DensityMatrix, stage1: MeasurementStage) -> DensityMatrix:
    """State after the first coupling, before any readout.

    In the eigenbasis of the measured observable every matrix element picks
    up the pair overlap ``exp(-(a - a')^2 / (8 sigma^2))``: off-diagonal
    coherences decay, the diagonal (and hence the trace) is untouched.
    An eigenstate of the observable passes through unchanged.
    """
    obs = stage1.observable
    require_same_dim(obs.dim, rho0.dim)
    v = obs.eigenvectors
    lam = obs.eigenvalues
    diff = lam[:, None] - lam[None, :]
    decay = np.exp(-(diff * diff) / (8.0 * stage1.sigma * stage1.sigma))
    rotated = v.conj().T @ rho0.matrix @ v
    return DensityMatrix(v @ (decay * rotated) @ v.conj().T)


def pointer1_variance(rho0: DensityMatrix, stage1: MeasurementStage) -> float:
    """Spread of the first pointer readout: ``sigma1^2 + Var(A)_rho0``.

    Depends only on the first stage; later stages cannot reach back in the
    joint model.
    """
    return stage1.sigma**2 + variance_of(stage1.observable, rho0)


def backaction_variance(
    rho0: DensityMatrix, stage1: MeasurementStage, observable_b: Observable
) -> float:
    """Variance of a second observable evaluated on the post-first state.

    Computed from the spectral weights of ``observable_b`` on the dephased
    state, so tests can pit it against the generic matrix-product variance.
    """
    require_same_dim(stage1.dim, observable_b.dim, rho0.dim)
    rho1 = post_first_state(rho0, stage1)
    weights = np.einsum("gij,ji->g", observable_b.projectors, rho1.matrix).real
    mean = float(np.dot(observable_b.levels, weights))
    second = float(np.dot(observable_b.levels**2, weights))
    return max(second - mean * mean, 0.0)


def pointer2_variance(
    rho0: DensityMatrix, stage1: MeasurementStage, stage2: MeasurementStage
) -> float:
    """Spread of the second pointer readout: ``sigma2^2 + Var(B)_rho1``."""
    require_same_dim(stage1.dim, stage2.dim, rho0.dim)
    return stage2.sigma**2 + backaction_variance(rho0, stage1, stage2.observable)


def joint_statistics(
    rho0: DensityMatrix, stage1: MeasurementStage, stage2: MeasurementStage
) -> JointModelResult:
    """All joint-model variances for one configuration."""
    require_same_dim(stage1.dim, stage2.dim, rho0.dim)
    rho1 = post_first_state(rho0, stage1)
    var_a = variance_of(stage1.observable, rho0)
    var_b_rho1 = backaction_variance(rho0, stage1, stage2.observable)
    return JointModelResult(
        rho1=rho1,
        var_x1=stage1.sigma**2 + var_a,
        var_x2=stage2.sigma**2 + var_b_rho1,
        var_a_rho0=var_a,
        var_b_rho1=var_b_rho1,
        var_b_rho0=variance_of(stage2.observable, rho0),
    )
