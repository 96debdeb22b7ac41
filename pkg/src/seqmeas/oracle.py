"""Independent verification paths: adaptive quadrature and Monte Carlo.

Everything the analytic Gaussian-pair algebra produces can be rechecked
here: pointer moments by adaptive quadrature over the outcome axis, and
chain statistics by sampling synthetic measurement records. Samplers use
the seeded PCG64 generator so every run is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .chain import ChainQuery, MeasurementChain, chain_state, conditional_density_k
from .errors import QuadratureFailure, RejectionStall
from .pointer import GaussianPairSum

#: Algorithm identifier of the sample generator, recorded in output metadata.
RNG_ALGORITHM = "PCG64"

_CHUNK = 1 << 16


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls for the adaptive quadrature oracle.

    ``domain_pad`` widens default domains by that many pointer widths
    beyond the extreme eigenvalues (tail mass < 1e-22 at the default 10).
    """

    domain_pad: float = 10.0
    abs_tol: float = 1e-10
    max_subdivisions: int = 1 << 16

    def __post_init__(self):
        if self.domain_pad < 4.0:
            raise ValueError("domain_pad below 4 sigma leaves visible tail mass")
        if self.abs_tol <= 0.0 or self.max_subdivisions < 1:
            raise ValueError("tolerances and subdivision cap must be positive")


@dataclass(frozen=True)
class SamplerConfig:
    """Sample count and seed for the Monte Carlo oracle."""

    samples: int
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")


def make_rng(cfg: SamplerConfig) -> np.random.Generator:
    return np.random.default_rng(cfg.seed)


def quad_moment(
    f: Callable[[float], float],
    domain: tuple[float, float],
    n: int,
    cfg: QuadratureConfig = QuadratureConfig(),
    points: Sequence[float] | None = None,
) -> float:
    """Adaptive quadrature of ``x^n f(x)`` over a finite domain.

    ``points`` marks interior breakpoints (typically the eigenvalues) so
    narrow Gaussian peaks are not stepped over.

    Raises
    ------
    QuadratureFailure
        If the error estimate misses both the absolute tolerance and a
        1e-10 relative floor at the subdivision cap.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise QuadratureFailure(f"empty domain ({lo}, {hi})")
    if n not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {n!r}")
    interior = None
    if points is not None:
        interior = [p for p in points if lo < p < hi]
        interior = interior or None
    value, estimate = integrate.quad(
        lambda x: (x**n) * f(x),
        lo,
        hi,
        epsabs=cfg.abs_tol,
        epsrel=1e-11,
        limit=cfg.max_subdivisions,
        points=interior,
    )
    if estimate > max(cfg.abs_tol, 1e-10 * abs(value)):
        raise QuadratureFailure(
            f"error estimate {estimate:.3e} exceeds tolerance for value {value:.6e}"
        )
    return float(value)


def pair_sum_domain(s: GaussianPairSum, pad_sigmas: float = 10.0) -> tuple[float, float]:
    """Interval containing all pair centers with a ``pad_sigmas`` margin."""
    centers = np.concatenate([s.centers_a, s.centers_b])
    pad = pad_sigmas * float(s.sigmas.max())
    return float(centers.min() - pad), float(centers.max() + pad)


def quad_pair_sum_stats(
    s: GaussianPairSum, cfg: QuadratureConfig = QuadratureConfig()
) -> tuple[float, float, float]:
    """(normalization, mean, variance) of a pair sum by quadrature only."""
    domain = pair_sum_domain(s, cfg.domain_pad)
    pts = sorted(set(np.concatenate([s.centers_a, s.centers_b]).tolist()))
    moments = [
        quad_moment(lambda x: float(s.value(x)), domain, n, cfg, points=pts) for n in (0, 1, 2)
    ]
    norm = moments[0]
    mean = moments[1] / norm
    return norm, mean, moments[2] / norm - mean * mean


def _pick_components(rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    # weights need not be normalized; draws are scaled by the row totals
    if weights.shape[1] == 2:
        totals = weights[:, 0] + weights[:, 1]
        return (rng.random(weights.shape[0]) * totals >= weights[:, 0]).astype(np.intp)
    cumulative = np.cumsum(weights, axis=1)
    draws = rng.random(weights.shape[0]) * cumulative[:, -1]
    return np.minimum(
        (cumulative < draws[:, None]).sum(axis=1), weights.shape[1] - 1
    )


def _rotate_states(states: np.ndarray, u: np.ndarray) -> np.ndarray:
    # batched U^dagger S U as two large GEMMs
    a = np.tensordot(states, u, axes=([2], [0]))
    b = np.tensordot(a, u.conj(), axes=([1], [0]))
    return b.transpose(0, 2, 1)


def _level_sums(full_values: np.ndarray, level_of: np.ndarray, n_levels: int) -> np.ndarray:
    if n_levels == level_of.size:
        return full_values
    sums = np.zeros((full_values.shape[0], n_levels))
    np.add.at(sums.T, level_of, full_values.T)
    return sums


def _sample_two_stage(chain: MeasurementChain, cfg: SamplerConfig) -> np.ndarray:
    # after one Kraus update the state is rho_tilde * (w w^T) elementwise,
    # so second-stage level weights follow from the amplitude vector alone
    rng = make_rng(cfg)
    n = cfg.samples
    first, second = chain.stages
    obs1, obs2 = first.observable, second.observable
    v1 = obs1.eigenvectors
    rho = v1.conj().T @ chain.initial_state.normalized().matrix @ v1
    u = v1.conj().T @ obs2.eigenvectors
    # kernels[s] = rho ∘ (u_s* u_s^T) are Hermitian: only their real
    # (symmetric) parts survive the w^T K w quadratic form
    d = chain.dim
    kernels = (rho[None, :, :] * u.T.conj()[:, :, None] * u.T[:, None, :]).real
    stacked = kernels.transpose(1, 0, 2).reshape(d, d * d)

    probs1 = _level_sums(
        np.clip(np.diag(rho).real, 0.0, None)[None, :], obs1.level_of, obs1.levels.size
    )[0]
    probs1 /= probs1.sum()
    cum1 = np.cumsum(probs1)
    out = np.empty((n, 2))
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        count = stop - start
        comp = np.searchsorted(cum1, rng.random(count), side="right")
        comp = np.minimum(comp, probs1.size - 1)
        x1 = obs1.levels[comp] + first.sigma * rng.standard_normal(count)
        out[start:stop, 0] = x1

        amps = np.exp(-((x1[:, None] - obs1.eigenvalues[None, :]) ** 2) / (4.0 * first.sigma**2))
        quad_forms = (amps @ stacked).reshape(count, d, d)
        diag2 = np.einsum("csq,cq->cs", quad_forms, amps)
        probs2 = _level_sums(np.clip(diag2, 0.0, None), obs2.level_of, obs2.levels.size)
        comp2 = _pick_components(rng, probs2)
        out[start:stop, 1] = obs2.levels[comp2] + second.sigma * rng.standard_normal(count)
    return out


def sample_chain(chain: MeasurementChain, cfg: SamplerConfig) -> np.ndarray:
    """Synthetic outcome records, one row per run of the whole chain.

    Each stage's outcome is drawn from the Gaussian mixture over the stage
    observable's levels weighted by the current (normalized) conditional
    state, after which the state is updated with the matching Kraus
    operator. Fixed seeds reproduce records exactly.

    States are carried in the current stage's eigenbasis, where the Kraus
    update is an elementwise weight product and level probabilities are
    diagonal sums; moving to the next stage is one fixed basis rotation.
    Two-stage chains skip the per-sample state entirely.
    """
    if len(chain) == 2:
        return _sample_two_stage(chain, cfg)
    rng = make_rng(cfg)
    n = cfg.samples
    stages = chain.stages
    rho0 = chain.initial_state.normalized().matrix
    rotations = [
        stages[j].observable.eigenvectors.conj().T @ stages[j + 1].observable.eigenvectors
        for j in range(len(stages) - 1)
    ]
    out = np.empty((n, len(stages)))
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        count = stop - start
        v0 = stages[0].observable.eigenvectors
        states = np.broadcast_to(v0.conj().T @ rho0 @ v0, (count,) + rho0.shape).copy()
        for j, stage in enumerate(stages):
            obs = stage.observable
            diag = np.clip(np.einsum("cpp->cp", states).real, 0.0, None)
            probs = _level_sums(diag, obs.level_of, obs.levels.size)
            comp = _pick_components(rng, probs)
            x = obs.levels[comp] + stage.sigma * rng.standard_normal(count)
            out[start:stop, j] = x
            if j + 1 == len(stages):
                break
            # sampled outcomes stay within a few sigma of a center, so the
            # raw amplitudes cannot underflow before normalization
            w = np.exp(
                -((x[:, None] - obs.eigenvalues[None, :]) ** 2) / (4.0 * stage.sigma**2)
            )
            states *= w[:, :, None] * w[:, None, :]
            states /= np.einsum("cpp->c", states).real[:, None, None]
            states = _rotate_states(states, rotations[j])
    return out


def jackknife_variance_se(x: np.ndarray) -> tuple[float, float]:
    """Sample variance of ``x`` and its delete-one jackknife standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need at least three samples")
    s1, s2 = x.sum(), (x * x).sum()
    variance = s2 / n - (s1 / n) ** 2
    mean_loo = (s1 - x) / (n - 1)
    var_loo = (s2 - x * x) / (n - 1) - mean_loo * mean_loo
    se = float(np.sqrt((n - 1) / n * ((var_loo - var_loo.mean()) ** 2).sum()))
    return float(variance), se


def _split_density(density: GaussianPairSum):
    cross = np.abs(density.centers_a - density.centers_b) > 1e-12
    significant = np.abs(density.coeffs) > 1e-14 * np.abs(density.coeffs).max()
    return cross & significant


def _sample_direct(rng, density: GaussianPairSum, n: int) -> np.ndarray:
    diagonal = np.abs(density.centers_a - density.centers_b) <= 1e-12
    keep = diagonal & (density.coeffs.real > 0)
    weights = density.coeffs.real[keep]
    centers = density.centers_a[keep]
    sigma = float(density.sigmas[0])
    probs = weights / weights.sum()
    comp = rng.choice(probs.size, size=n, p=probs)
    return centers[comp] + sigma * rng.standard_normal(n)


def _sample_rejection(
    rng,
    density: GaussianPairSum,
    proposal_weights: np.ndarray,
    proposal_centers: np.ndarray,
    n: int,
) -> np.ndarray:
    sigma = float(density.sigmas[0])
    support = proposal_weights > 1e-300
    weights = proposal_weights[support] / proposal_weights[support].sum()
    centers = proposal_centers[support]

    # rigorous envelope: v^T C v <= lam_max(C) * sum_i psi_i^2 and the
    # proposal mixture dominates that sum by its smallest weight
    dim = int(np.sqrt(density.coeffs.size))
    coeff_matrix = density.coeffs.reshape(dim, dim)
    lam_max = float(np.linalg.eigvalsh(coeff_matrix)[-1].real)
    envelope = 1.1 * lam_max / float(weights.min())

    norm_const = (2.0 * np.pi * sigma * sigma) ** -0.5
    accepted: list[np.ndarray] = []
    got, proposed = 0, 0
    batch = max(n // 4, 4096)
    while got < n:
        comp = rng.choice(weights.size, size=batch, p=weights)
        y = centers[comp] + sigma * rng.standard_normal(batch)
        proposal_pdf = (
            weights[None, :]
            * norm_const
            * np.exp(-((y[:, None] - centers[None, :]) ** 2) / (2.0 * sigma * sigma))
        ).sum(axis=1)
        target = density.value(y)
        accept = rng.random(batch) * envelope * proposal_pdf <= target
        accepted.append(y[accept])
        got += int(accept.sum())
        proposed += batch
        if proposed >= 100_000 and got / proposed < 1e-6:
            raise RejectionStall(f"acceptance rate {got / proposed:.2e}")
    return np.concatenate(accepted)[:n]


def mc_conditional_variance(
    chain: MeasurementChain, query: ChainQuery, cfg: SamplerConfig
) -> tuple[float, float]:
    """Monte Carlo estimate of the conditional variance of the free outcome.

    Samples the exact conditional density: directly when it is a plain
    mixture (no cross terms), otherwise by rejection against the
    unconditioned stage mixture with a provable envelope constant. Returns
    the sample variance and its jackknife standard error.
    """
    rng = make_rng(cfg)
    density, _ = conditional_density_k(chain, query)
    if not _split_density(density).any():
        samples = _sample_direct(rng, density, cfg.samples)
    else:
        rho_before = chain_state(chain, query.outcomes_before())
        free_stage = chain.stages[query.free_index - 1]
        v = free_stage.observable.eigenvectors
        rho_diag = np.clip(
            np.diag(v.conj().T @ rho_before.matrix @ v).real, 0.0, None
        )
        samples = _sample_rejection(
            rng,
            density,
            rho_diag / rho_diag.sum(),
            free_stage.observable.eigenvalues,
            cfg.samples,
        )
    return jackknife_variance_se(samples)
