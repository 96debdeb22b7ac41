"""Dense complex linear algebra for finite-dimensional quantum systems.

States are density matrices, observables are stored spectrally
(eigenvalues, eigenvectors, and one projector per distinct eigenvalue).
Everything is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotHermitian, ZeroLikelihood

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
DEGENERACY_GAP_TOL = 1e-9
VARIANCE_CLAMP = 1e-12


def _as_square_complex(matrix) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return m


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Largest entrywise deviation of ``matrix`` from its adjoint."""
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def eigh(matrix, *, herm_tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix, Hermitian within ``herm_tol`` (entrywise).
    herm_tol : float
        Largest tolerated entry of ``M - M^dagger``.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Orthonormal eigenvectors as columns, matching the eigenvalue order.

    Raises
    ------
    NotHermitian
        If the Hermiticity tolerance is violated.
    NoConvergence
        If the underlying solver fails to converge.
    """
    m = _as_square_complex(matrix)
    defect = hermiticity_defect(m)
    if defect > herm_tol:
        raise NotHermitian(f"max |M - M^dagger| = {defect:.3e} exceeds {herm_tol:.1e}")
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return values, vectors


def group_degenerate(eigenvalues, gap_tol: float = DEGENERACY_GAP_TOL) -> list[list[int]]:
    """Partition ascending eigenvalues into groups of (near-)degenerate ones.

    Consecutive eigenvalues closer than ``gap_tol`` are merged into one
    spectral group; each group later becomes a single projector.
    """
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    values = np.asarray(eigenvalues, dtype=float)
    if values.size == 0:
        return []
    if np.any(np.diff(values) < -gap_tol):
        raise ValueError("eigenvalues must be ascending")
    groups = [[0]]
    for i in range(1, values.size):
        if values[i] - values[groups[-1][-1]] <= gap_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


@dataclass(frozen=True)
class Observable:
    """Hermitian operator stored as spectral data.

    Attributes
    ----------
    matrix : ndarray
        The operator in the computational basis.
    eigenvalues : ndarray
        Ascending eigenvalues, with multiplicity.
    eigenvectors : ndarray
        Orthonormal eigenvector columns, aligned with ``eigenvalues``.
    levels : ndarray
        Distinct eigenvalues after degeneracy grouping.
    projectors : ndarray
        Stack of spectral projectors, one per level; Hermitian, idempotent,
        mutually orthogonal, summing to the identity.
    level_of : ndarray
        Index into ``levels`` for each entry of ``eigenvalues``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    levels: np.ndarray
    projectors: np.ndarray
    level_of: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix, gap_tol: float = DEGENERACY_GAP_TOL) -> "Observable":
        """Build an observable from a Hermitian matrix."""
        m = _as_square_complex(matrix)
        values, vectors = eigh(m)
        return cls.from_spectrum(values, vectors, gap_tol=gap_tol, matrix=m)

    @classmethod
    def from_spectrum(
        cls,
        eigenvalues,
        eigenvectors,
        gap_tol: float = DEGENERACY_GAP_TOL,
        matrix: np.ndarray | None = None,
    ) -> "Observable":
        """Build an observable from ascending eigenvalues and orthonormal columns."""
        values = np.asarray(eigenvalues, dtype=float).copy()
        vectors = np.array(eigenvectors, dtype=complex)
        d = values.size
        if vectors.shape != (d, d):
            raise DimensionMismatch(
                f"{d} eigenvalues but eigenvector block of shape {vectors.shape}"
            )
        unitarity = np.max(np.abs(vectors.conj().T @ vectors - np.eye(d)))
        if unitarity > 1e-10:
            raise ValueError(f"eigenvectors not orthonormal: defect {unitarity:.3e}")
        groups = group_degenerate(values, gap_tol)
        levels = np.array([values[g].mean() for g in groups])
        projectors = np.stack(
            [vectors[:, g] @ vectors[:, g].conj().T for g in groups]
        )
        level_of = np.empty(d, dtype=np.intp)
        for g_index, members in enumerate(groups):
            level_of[members] = g_index
        if matrix is None:
            matrix = (vectors * values) @ vectors.conj().T
        return cls(
            matrix=_frozen(matrix),
            eigenvalues=_frozen(values),
            eigenvectors=_frozen(vectors),
            levels=_frozen(levels),
            projectors=_frozen(projectors),
            level_of=_frozen(level_of),
        )


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian positive-semidefinite state, normalized or not.

    The physical matrix is ``exp(log_scale) * matrix``; the split keeps
    conditional states with astronomically small likelihoods representable.
    A normalized state has ``log_scale == 0`` and unit trace.
    """

    matrix: np.ndarray
    log_scale: float = 0.0
    herm_tol: float = field(default=HERMITICITY_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _as_square_complex(self.matrix)
        defect = hermiticity_defect(m)
        if defect > self.herm_tol:
            raise NotHermitian(f"max |rho - rho^dagger| = {defect:.3e}")
        min_eig = float(np.linalg.eigvalsh(m)[0]) if m.size else 0.0
        if min_eig < -PSD_TOL:
            raise ValueError(f"state not positive semidefinite: min eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        """Physical trace; may underflow to 0.0 for extreme conditioning."""
        return float(np.trace(self.matrix).real * np.exp(self.log_scale))

    @property
    def log_trace(self) -> float:
        """Logarithm of the physical trace, robust against underflow."""
        t = float(np.trace(self.matrix).real)
        if t <= 0.0:
            return -np.inf
        return float(np.log(t) + self.log_scale)

    @property
    def is_normalized(self) -> bool:
        return self.log_scale == 0.0 and abs(float(np.trace(self.matrix).real) - 1.0) <= 1e-12

    def normalized(self) -> "DensityMatrix":
        """Unit-trace version of this state.

        Raises
        ------
        ZeroLikelihood
            If the trace is too small to normalize against.
        """
        t = float(np.trace(self.matrix).real)
        if not np.isfinite(t) or t < 1e-300:
            raise ZeroLikelihood(f"cannot normalize state with trace {t:.3e}")
        return DensityMatrix(self.matrix / t)

    @classmethod
    def from_matrix(cls, matrix, *, require_normalized: bool = True) -> "DensityMatrix":
        state = cls(matrix)
        if require_normalized:
            t = float(np.trace(state.matrix).real)
            if abs(t - 1.0) > 1e-12:
                raise ValueError(f"trace {t!r} differs from 1 beyond 1e-12")
        return state

    @classmethod
    def pure(cls, amplitudes) -> "DensityMatrix":
        """Projector onto a (normalized) state vector."""
        v = np.asarray(amplitudes, dtype=complex).ravel()
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"amplitudes have norm {norm!r}, expected 1")
        return cls(np.outer(v, v.conj()))


@dataclass(frozen=True)
class PureState:
    """Unit-norm state vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).ravel()
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("amplitudes contain non-finite entries")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} differs from 1 beyond 1e-12")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap_with(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def require_same_dim(*dims: int) -> None:
    if len(set(dims)) > 1:
        raise DimensionMismatch(f"dimensions disagree: {dims}")


def expectation_of(obs: Observable, rho: DensityMatrix) -> float:
    """Tr[A rho] for a normalized state."""
    require_same_dim(obs.dim, rho.dim)
    return float(np.trace(obs.matrix @ rho.matrix).real)


def variance_of(obs: Observable, rho: DensityMatrix) -> float:
    """Variance Tr[A^2 rho] - Tr[A rho]^2 of an observable in a state.

    Small negative roundoff (above ``-1e-12``) is clamped to zero.
    """
    require_same_dim(obs.dim, rho.dim)
    t = float(np.trace(rho.matrix).real * np.exp(rho.log_scale))
    if abs(t - 1.0) > 1e-9:
        raise ValueError(f"variance_of expects a normalized state, trace is {t!r}")
    a = obs.matrix
    mean = float(np.trace(a @ rho.matrix).real)
    second = float(np.trace(a @ a @ rho.matrix).real)
    var = second - mean * mean
    if var < -VARIANCE_CLAMP:
        raise ValueError(f"variance {var:.3e} below roundoff floor; inputs inconsistent")
    return max(var, 0.0)
