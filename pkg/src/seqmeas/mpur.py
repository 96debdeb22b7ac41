"""Variance-sum uncertainty bounds and their conditional-measurement probe.

Implements the Heisenberg-Robertson commutator bound's stronger cousin:
``Var(A) + Var(B) >= max(R_a, R_b)`` with the two candidate bounds built
from an orthogonal state and from the variance of ``A + B``. Also
evaluates the sum of the two conditional (extracted) variances of a
two-stage measurement against that bound; the conditional sum may dip
below it, which is the point of the demonstration, not a violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .conditional import backward_stats, forward_stats
from .core import DensityMatrix, Observable, PureState, require_same_dim
from .errors import DegenerateDirection, NotOrthogonal
from .kraus import MeasurementStage

ORTHOGONALITY_TOL = 1e-10
ZERO_VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class MpurReport:
    """Outcome of one variance-sum bound check."""

    lhs_sum: float
    r_a: float
    r_b: float
    bound: float
    satisfied: bool
    commutator_sign: int


class ConditionalMpurSum(NamedTuple):
    sum: float
    classical_bound: float
    below: bool


def _expect(vector: np.ndarray, matrix: np.ndarray) -> complex:
    return complex(np.vdot(vector, matrix @ vector))


def _pure_variance(psi: PureState, obs: Observable) -> float:
    v = psi.amplitudes
    mean = _expect(v, obs.matrix).real
    second = _expect(v, obs.matrix @ obs.matrix).real
    return max(second - mean * mean, 0.0)


def orthogonal_state(psi: PureState, observable: Observable) -> PureState:
    """Normalized ``(A - <A>)|psi>``; orthogonal to ``psi`` by construction.

    Raises
    ------
    DegenerateDirection
        If ``psi`` is (numerically) an eigenstate of the observable, in
        which case the construction has nothing to normalize.
    """
    require_same_dim(psi.dim, observable.dim)
    v = psi.amplitudes
    mean = _expect(v, observable.matrix).real
    shifted = observable.matrix @ v - mean * v
    norm = float(np.linalg.norm(shifted))
    if norm * norm <= ZERO_VARIANCE_TOL:
        raise DegenerateDirection(
            f"variance {norm * norm:.3e} too small to define an orthogonal direction"
        )
    return PureState(shifted / norm)


def commutator_sign(psi: PureState, a: Observable, b: Observable) -> int:
    """Sign making ``+/- i <[A, B]>`` nonnegative (+1 on ties)."""
    comm = _expect(psi.amplitudes, a.matrix @ b.matrix - b.matrix @ a.matrix)
    return 1 if (1j * comm).real >= 0.0 else -1


def bound_Ra(
    psi: PureState,
    a: Observable,
    b: Observable,
    psi_perp: PureState,
    sign: int | None = None,
) -> float:
    """First candidate bound ``+/- i<[A,B]> + |<psi|A +/- iB|psi_perp>|^2``.

    ``sign`` is +1 or -1; by default it is chosen so the commutator term is
    nonnegative. ``psi_perp`` must be orthonormal to ``psi``.
    """
    require_same_dim(psi.dim, a.dim, b.dim, psi_perp.dim)
    cross = abs(psi.overlap_with(psi_perp))
    if cross > ORTHOGONALITY_TOL:
        raise NotOrthogonal(f"|<psi|psi_perp>| = {cross:.3e}")
    if sign is None:
        sign = commutator_sign(psi, a, b)
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    v, w = psi.amplitudes, psi_perp.amplitudes
    comm = complex(np.vdot(v, (a.matrix @ b.matrix - b.matrix @ a.matrix) @ v))
    comm_term = (sign * 1j * comm).real
    cross_amp = complex(np.vdot(v, (a.matrix + sign * 1j * b.matrix) @ w))
    return float(comm_term + abs(cross_amp) ** 2)


def bound_Rb(psi: PureState, a: Observable, b: Observable) -> float:
    """Second candidate bound ``|<psi_perp_{A+B}|A+B|psi>|^2 / 2``.

    Built from the explicit orthogonal state of ``A + B``; algebraically it
    equals half the variance of ``A + B``, and collapses to zero (its
    limiting value) when ``psi`` is an eigenstate of the sum.
    """
    require_same_dim(psi.dim, a.dim, b.dim)
    total = Observable.from_matrix(a.matrix + b.matrix)
    if _pure_variance(psi, total) <= ZERO_VARIANCE_TOL:
        return 0.0
    perp = orthogonal_state(psi, total)
    cross = complex(np.vdot(perp.amplitudes, total.matrix @ psi.amplitudes))
    return float(0.5 * abs(cross) ** 2)


def mpur_check(psi: PureState, a: Observable, b: Observable) -> MpurReport:
    """Evaluate ``Var(A) + Var(B) >= max(R_a, R_b)`` for a pure state.

    The orthogonal state for ``R_a`` follows the standard recipe: built
    from ``A`` when possible, from ``B`` otherwise, and from any unit
    vector orthogonal to ``psi`` if the state is an eigenstate of both
    (every choice is admissible; the bound then degenerates gracefully).
    """
    require_same_dim(psi.dim, a.dim, b.dim)
    lhs = _pure_variance(psi, a) + _pure_variance(psi, b)
    psi_perp = None
    for reference in (a, b):
        try:
            psi_perp = orthogonal_state(psi, reference)
            break
        except DegenerateDirection:
            continue
    if psi_perp is None:
        psi_perp = _any_orthogonal(psi)
    sign = commutator_sign(psi, a, b)
    r_a = bound_Ra(psi, a, b, psi_perp, sign=sign)
    r_b = bound_Rb(psi, a, b)
    bound = max(r_a, r_b)
    return MpurReport(
        lhs_sum=float(lhs),
        r_a=r_a,
        r_b=r_b,
        bound=bound,
        satisfied=bool(lhs >= bound - 1e-10),
        commutator_sign=sign,
    )


def _any_orthogonal(psi: PureState) -> PureState:
    v = psi.amplitudes
    for i in range(v.size):
        candidate = np.zeros_like(v)
        candidate[i] = 1.0
        candidate = candidate - np.vdot(v, candidate) * v
        norm = float(np.linalg.norm(candidate))
        if norm > 0.5:
            return PureState(candidate / norm)
    raise DegenerateDirection("no orthogonal direction found")  # pragma: no cover


def conditional_mpur_sum(
    rho0: DensityMatrix,
    stage1: MeasurementStage,
    stage2: MeasurementStage,
    x1: float,
    x2: float,
) -> ConditionalMpurSum:
    """Sum of the two extracted conditional variances against the pure-state bound.

    The classical bound is evaluated for the (pure) initial state and the
    two stage observables; ``below`` reports whether conditioning pushed
    the sum under it. This is a per-configuration evaluation, not a claim
    that any fixed bound governs conditional variances in general.
    """
    require_same_dim(rho0.dim, stage1.dim, stage2.dim)
    values, vectors = np.linalg.eigh(rho0.matrix)
    if values[-1] < 1.0 - 1e-8:
        raise ValueError("initial state must be pure for the reference bound")
    psi = PureState(vectors[:, -1])
    forward = forward_stats(rho0, stage1, stage2, x1).extracted_system_variance
    backward = backward_stats(rho0, stage1, stage2, x2).extracted_system_variance
    report = mpur_check(psi, stage1.observable, stage2.observable)
    total = float(forward + backward)
    return ConditionalMpurSum(
        sum=total,
        classical_bound=report.bound,
        below=bool(total < report.bound),
    )
