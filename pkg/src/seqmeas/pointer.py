"""Exact algebra of zero-mean Gaussian pointer wavefunctions.

Every pointer-space integral in the measurement models reduces to moments
of products ``psi(x - a) psi(x - a')`` of two shifted copies of the same
Gaussian amplitude. This module provides that closed-form kernel: single
amplitudes, pairwise overlaps, and moments of weighted sums of amplitude
pairs. Position is dimensionless and hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidOrder, NonHermitianSum

#: Relative imaginary residue above which a pair-sum moment is rejected.
HERMITIAN_RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class Pointer:
    """Gaussian probe of width ``sigma``.

    Small ``sigma`` is a strong (projective-like) measurement, large
    ``sigma`` a weak one.
    """

    sigma: float

    def __post_init__(self):
        s = float(self.sigma)
        if not np.isfinite(s) or s <= 0.0:
            raise ValueError(f"sigma must be finite and positive, got {self.sigma!r}")
        object.__setattr__(self, "sigma", s)


def amplitude(pointer: Pointer, x, a):
    """Pointer amplitude ``(2 pi sigma^2)^(-1/4) exp(-(x-a)^2 / (4 sigma^2))``.

    The square integrates to one: the amplitude squared is the normal
    density with mean ``a`` and variance ``sigma^2``.
    """
    s2 = pointer.sigma * pointer.sigma
    return (2.0 * np.pi * s2) ** -0.25 * np.exp(-((np.asarray(x) - a) ** 2) / (4.0 * s2))


def log_amplitude(pointer: Pointer, x, a):
    """Natural log of :func:`amplitude`; safe for outcomes far from ``a``."""
    s2 = pointer.sigma * pointer.sigma
    return -0.25 * np.log(2.0 * np.pi * s2) - ((np.asarray(x) - a) ** 2) / (4.0 * s2)


def overlap(pointer: Pointer, a: float, aprime: float) -> float:
    """Overlap ``exp(-(a - a')^2 / (8 sigma^2))`` of two shifted amplitudes."""
    d = a - aprime
    return float(np.exp(-(d * d) / (8.0 * pointer.sigma * pointer.sigma)))


def pair_moment(pointer: Pointer, a: float, aprime: float, n: int) -> float:
    """Moment ``int x^n psi(x-a) psi(x-a') dx`` in closed form.

    Equals ``overlap(a, a') * m_n`` with ``m_0 = 1``, ``m_1 = mu`` and
    ``m_2 = mu^2 + sigma^2`` where ``mu = (a + a') / 2``.
    """
    if n not in (0, 1, 2):
        raise InvalidOrder(f"moment order must be 0, 1 or 2, got {n!r}")
    d = overlap(pointer, a, aprime)
    mu = 0.5 * (a + aprime)
    if n == 0:
        return d
    if n == 1:
        return d * mu
    return d * (mu * mu + pointer.sigma * pointer.sigma)


@dataclass(frozen=True)
class GaussianPairTerm:
    """One weighted amplitude pair ``coeff * psi(x - center_a) psi(x - center_b)``."""

    coeff: complex
    center_a: float
    center_b: float
    sigma: float


class GaussianPairSum:
    """Finite sum of weighted Gaussian amplitude pairs.

    Hermitian symmetry is expected: for every term ``(c, a, a', sigma)``
    the sum must contain ``(conj(c), a', a, sigma)`` (possibly the same
    term when ``a == a'`` and ``c`` is real). That guarantees real values
    and real moments; :meth:`moment` enforces it via the imaginary residue.
    """

    __slots__ = ("coeffs", "centers_a", "centers_b", "sigmas")

    def __init__(self, coeffs, centers_a, centers_b, sigmas):
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        self.centers_a = np.atleast_1d(np.asarray(centers_a, dtype=float))
        self.centers_b = np.atleast_1d(np.asarray(centers_b, dtype=float))
        sig = np.asarray(sigmas, dtype=float)
        if sig.ndim == 0:
            sig = np.full(self.coeffs.shape, float(sig))
        self.sigmas = sig
        shapes = {a.shape for a in (self.coeffs, self.centers_a, self.centers_b, self.sigmas)}
        if len(shapes) != 1:
            raise ValueError(f"field lengths disagree: {shapes}")
        if np.any(self.sigmas <= 0.0) or not np.all(np.isfinite(self.sigmas)):
            raise ValueError("all sigmas must be finite and positive")
        if not np.all(np.isfinite(self.coeffs.view(float))):
            raise ValueError("coefficients must be finite")
        for arr in (self.coeffs, self.centers_a, self.centers_b, self.sigmas):
            arr.setflags(write=False)

    @classmethod
    def from_terms(cls, terms: Iterable[GaussianPairTerm]) -> "GaussianPairSum":
        terms = list(terms)
        return cls(
            [t.coeff for t in terms],
            [t.center_a for t in terms],
            [t.center_b for t in terms],
            [t.sigma for t in terms],
        )

    @classmethod
    def mixture(cls, weights: Sequence[float], centers: Sequence[float], sigma: float) -> "GaussianPairSum":
        """Diagonal sum ``sum_i w_i psi(x - c_i)^2``: a plain Gaussian mixture."""
        centers = np.asarray(centers, dtype=float)
        return cls(np.asarray(weights, dtype=complex), centers, centers, sigma)

    def __len__(self) -> int:
        return self.coeffs.size

    def terms(self) -> list[GaussianPairTerm]:
        return [
            GaussianPairTerm(complex(c), float(a), float(b), float(s))
            for c, a, b, s in zip(self.coeffs, self.centers_a, self.centers_b, self.sigmas)
        ]

    def _overlaps(self) -> np.ndarray:
        d = self.centers_a - self.centers_b
        return np.exp(-(d * d) / (8.0 * self.sigmas * self.sigmas))

    def value(self, x):
        """Pointwise value of the sum; real by Hermitian symmetry."""
        x = np.asarray(x, dtype=float)
        xa = x[..., None] - self.centers_a
        xb = x[..., None] - self.centers_b
        s2 = self.sigmas * self.sigmas
        gauss = (2.0 * np.pi * s2) ** -0.5 * np.exp(-(xa * xa + xb * xb) / (4.0 * s2))
        out = (self.coeffs * gauss).sum(axis=-1)
        return out.real if out.ndim else float(out.real)

    def _moment_terms(self, n: int) -> np.ndarray:
        if n not in (0, 1, 2):
            raise InvalidOrder(f"moment order must be 0, 1 or 2, got {n!r}")
        d = self._overlaps()
        mu = 0.5 * (self.centers_a + self.centers_b)
        if n == 0:
            base = np.ones_like(mu)
        elif n == 1:
            base = mu
        else:
            base = mu * mu + self.sigmas * self.sigmas
        return self.coeffs * d * base

    def _reduce_real(self, contributions: np.ndarray) -> float:
        total = complex(contributions.sum())
        scale = float(np.abs(contributions).sum())
        if abs(total.imag) > HERMITIAN_RESIDUE_TOL * max(scale, 1e-300):
            raise NonHermitianSum(
                f"imaginary residue {total.imag:.3e} against scale {scale:.3e}"
            )
        return float(total.real)

    def moment(self, n: int) -> float:
        """Moment ``int x^n * value(x) dx`` of the (unnormalized) sum."""
        return self._reduce_real(self._moment_terms(n))

    def center_second_moment(self) -> float:
        """Like ``moment(2)`` but without the per-term ``sigma^2`` offset.

        For a shared-sigma sum this isolates the spread of the pair centers,
        so conditional variances can be extracted without subtracting two
        nearly equal numbers.
        """
        d = self._overlaps()
        mu = 0.5 * (self.centers_a + self.centers_b)
        return self._reduce_real(self.coeffs * d * mu * mu)


def sum_moment(s: GaussianPairSum, n: int) -> float:
    """Module-level alias for :meth:`GaussianPairSum.moment`."""
    return s.moment(n)
