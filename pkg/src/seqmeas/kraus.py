"""Measurement (Kraus) and effect operators for Gaussian-pointer stages.

A stage couples one system observable to one Gaussian probe. For a pointer
outcome ``x`` the Kraus operator is the eigenprojector sum weighted by the
pointer amplitude at ``x - a`` for each eigenvalue ``a``; the effect
operator is its square. Operators are stored densely in the computational
basis so chains over different observables multiply without basis
bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Observable
from .errors import QuadratureFailure
from .pointer import Pointer, amplitude, log_amplitude


@dataclass(frozen=True)
class MeasurementStage:
    """One indirect measurement: an observable probed at strength ``sigma``."""

    observable: Observable
    pointer: Pointer
    label: str = ""

    @property
    def dim(self) -> int:
        return self.observable.dim

    @property
    def sigma(self) -> float:
        return self.pointer.sigma


@dataclass(frozen=True)
class KrausOperator:
    """Measurement operator for one pointer outcome."""

    matrix: np.ndarray
    outcome: float


@dataclass(frozen=True)
class EffectOperator:
    """Positive operator ``M^dagger M`` for one or more pointer outcomes.

    The physical operator is ``exp(log_scale) * matrix``; chained effects
    keep their matrices O(1) and track magnitude separately.
    """

    matrix: np.ndarray
    outcomes: tuple[float, ...]
    log_scale: float = 0.0


def scaled_kraus_weights(stage: MeasurementStage, x: float) -> tuple[np.ndarray, float]:
    """Per-level amplitudes rescaled so the largest is one.

    Returns ``(weights, log_scale)`` with true amplitudes
    ``exp(log_scale) * weights``; keeps far-outcome chains representable.
    """
    logs = log_amplitude(stage.pointer, x, stage.observable.levels)
    top = float(np.max(logs))
    return np.exp(logs - top), top


def kraus_at(stage: MeasurementStage, x: float) -> KrausOperator:
    """Kraus operator ``sum_a psi(x - a) P_a`` at pointer outcome ``x``.

    Diagonal in the stage observable's eigenbasis; its operator norm never
    exceeds the peak amplitude ``amplitude(sigma, 0, 0)``.
    """
    w = amplitude(stage.pointer, x, stage.observable.levels)
    matrix = np.einsum("g,gij->ij", w, stage.observable.projectors)
    return KrausOperator(matrix=matrix, outcome=float(x))


def effect_at(stage: MeasurementStage, x: float) -> EffectOperator:
    """Effect operator ``sum_a psi(x - a)^2 P_a``; equals ``M^dagger M``."""
    w = amplitude(stage.pointer, x, stage.observable.levels) ** 2
    matrix = np.einsum("g,gij->ij", w, stage.observable.projectors)
    return EffectOperator(matrix=matrix, outcomes=(float(x),))


def default_domain(stage: MeasurementStage, pad_sigmas: float = 10.0) -> tuple[float, float]:
    """Outcome interval covering every eigenvalue with a ``pad_sigmas`` margin."""
    levels = stage.observable.levels
    pad = pad_sigmas * stage.sigma
    return float(levels.min() - pad), float(levels.max() + pad)


def completeness_defect(stage: MeasurementStage, cfg=None, domain=None) -> float:
    """Max-norm defect ``|| int M_x^dagger M_x dx - I ||`` by quadrature.

    With the default domain (ten sigma beyond the extreme eigenvalues) the
    defect is tail mass only, far below 1e-8. Passing a narrower ``domain``
    quantifies truncation sensitivity instead.
    """
    from .oracle import QuadratureConfig, quad_moment

    if cfg is None:
        cfg = QuadratureConfig()
    if domain is None:
        domain = default_domain(stage, cfg.domain_pad)
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise QuadratureFailure(f"empty quadrature domain ({lo}, {hi})")
    weights = [
        quad_moment(lambda x, a=a: float(amplitude(stage.pointer, x, a) ** 2), (lo, hi), 0, cfg)
        for a in stage.observable.levels
    ]
    total = np.einsum("g,gij->ij", np.asarray(weights), stage.observable.projectors)
    return float(np.max(np.abs(total - np.eye(stage.dim))))
