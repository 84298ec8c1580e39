"""Forward simulators for both models and the brute-force oracles (path
enumeration, grid posteriors) that tests and the verify command check the
samplers against.

The jump simulator is faithful to the generative model: every observation
draws its own Poisson jump count (inference works with a single per-state
count; the mismatch is deliberate and the recovery tolerances absorb it).
The oracles share no numerics with the modules they check beyond the basic
density functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.special import logsumexp

from .distributions import StableParams, stable_sample
from .errors import NumericalError, ParameterError
from .jump_model import JumpParams
from .regime import validate_transition_matrix
from .stable_model import StableModelParams

__all__ = [
    "SyntheticDataset",
    "simulate_jump_model",
    "simulate_stable_model",
    "EnumeratedPosterior",
    "enumerate_path_posterior",
    "enumerate_filtered_probs",
    "grid_posterior",
]

_MAX_ENUMERATION = 10_000


@dataclass
class SyntheticDataset:
    """Simulated observations with their latent truth, regenerable from seed."""

    observations: np.ndarray
    true_path: np.ndarray  # labels 1..M
    true_params: Any
    seed: int | None = None


def _simulate_path(
    p: np.ndarray, pi0: np.ndarray, t_len: int, rng: np.random.Generator, m: int
) -> np.ndarray:
    # a single state carries no randomness; skipping the draw keeps the
    # observation stream aligned with direct sampling
    if m == 1:
        return np.ones(t_len, dtype=np.int64)
    path = np.empty(t_len, dtype=np.int64)
    cum0 = np.cumsum(pi0)
    cump = np.cumsum(p, axis=1)
    path[0] = np.searchsorted(cum0, rng.random() * cum0[-1])
    for t in range(1, t_len):
        row = cump[path[t - 1]]
        path[t] = np.searchsorted(row, rng.random() * row[-1])
    return path + 1


def simulate_jump_model(
    params: JumpParams,
    p: np.ndarray,
    pi0: np.ndarray | None,
    t_len: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> SyntheticDataset:
    """Forward-simulate the jump model: per observation draw the state, the
    Gaussian part, a Poisson jump count N_t, the Gamma jump magnitude and a
    fair sign."""
    m = params.n_states
    p = validate_transition_matrix(p)
    pi0 = np.full(m, 1.0 / m) if pi0 is None else np.asarray(pi0, dtype=float)
    path = _simulate_path(p, pi0, t_len, rng, m)
    sd = np.sqrt(params.sigma_sq)[path - 1]
    mu = params.mu[path - 1]
    eps = rng.normal(mu, sd)
    counts = rng.poisson(params.theta[path - 1])
    magnitude = rng.gamma(np.maximum(counts, 1), 1.0 / params.b)
    signs = rng.integers(0, 2, t_len) * 2 - 1
    jumps = np.where(counts > 0, signs * magnitude, 0.0)
    return SyntheticDataset(
        observations=eps + jumps, true_path=path, true_params=params, seed=seed
    )


def simulate_stable_model(
    params: StableModelParams,
    p: np.ndarray,
    pi0: np.ndarray | None,
    t_len: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> SyntheticDataset:
    """Forward-simulate the stable model: state path, then a symmetric stable
    draw with the state's scale and location.  With a single state this
    reduces to (and exactly reproduces) a stable_sample stream."""
    m = params.n_states
    p = validate_transition_matrix(p)
    pi0 = np.full(m, 1.0 / m) if pi0 is None else np.asarray(pi0, dtype=float)
    path = _simulate_path(p, pi0, t_len, rng, m)
    gamma = np.sqrt(params.gamma_sq)
    if m == 1:
        sp = StableParams(params.alpha, 0.0, float(gamma[0]), float(params.mu[0]))
        values = stable_sample(sp, rng, size=t_len)
    else:
        state_params = [
            StableParams(params.alpha, 0.0, float(gamma[j]), float(params.mu[j]))
            for j in range(m)
        ]
        values = np.empty(t_len)
        for t in range(t_len):
            values[t] = stable_sample(state_params[path[t] - 1], rng)
    return SyntheticDataset(
        observations=values, true_path=path, true_params=params, seed=seed
    )


# ---------------------------------------------------------------------------
# enumeration oracles


@dataclass
class EnumeratedPosterior:
    """Exact joint posterior over all M^T state paths."""

    paths: np.ndarray  # (K, T) labels 1..M
    probs: np.ndarray  # (K,) normalized joint posterior
    marginals: np.ndarray  # (T, M) smoothed marginals
    loglik: float


def _check_enumeration_size(t_len: int, m: int) -> None:
    if m**t_len > _MAX_ENUMERATION:
        raise ParameterError(
            f"refusing to enumerate {m}^{t_len} paths (limit {_MAX_ENUMERATION})"
        )


def enumerate_path_posterior(
    log_emissions: np.ndarray, p: np.ndarray, pi0: np.ndarray
) -> EnumeratedPosterior:
    """Brute force over every path: joint probabilities, smoothed marginals
    and the data log likelihood.  Tractable only for M^T <= 10^4."""
    log_emissions = np.asarray(log_emissions, dtype=float)
    t_len, m = log_emissions.shape
    _check_enumeration_size(t_len, m)
    p = validate_transition_matrix(p)
    pi0 = np.asarray(pi0, dtype=float)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
        log_pi0 = np.log(pi0)
    grids = np.meshgrid(*[np.arange(m)] * t_len, indexing="ij")
    paths0 = np.stack([g.ravel() for g in grids], axis=1)  # (K, T), 0-based
    log_w = log_pi0[paths0[:, 0]] + log_emissions[0, paths0[:, 0]]
    for t in range(1, t_len):
        log_w += log_p[paths0[:, t - 1], paths0[:, t]] + log_emissions[t, paths0[:, t]]
    loglik = float(logsumexp(log_w))
    probs = np.exp(log_w - loglik)
    probs /= probs.sum()
    marginals = np.zeros((t_len, m))
    for t in range(t_len):
        np.add.at(marginals[t], paths0[:, t], probs)
    return EnumeratedPosterior(
        paths=paths0 + 1, probs=probs, marginals=marginals, loglik=loglik
    )


def enumerate_filtered_probs(
    log_emissions: np.ndarray, p: np.ndarray, pi0: np.ndarray
) -> np.ndarray:
    """Exact filtered distributions g(S_t | y_1..y_t) by expanding all M^t
    prefixes per step (no collapsed forward recursion is reused, so this is
    an independent check of the filter)."""
    log_emissions = np.asarray(log_emissions, dtype=float)
    t_len, m = log_emissions.shape
    _check_enumeration_size(t_len, m)
    p = validate_transition_matrix(p)
    pi0 = np.asarray(pi0, dtype=float)
    out = np.empty((t_len, m))
    # weights over all prefixes, flattened; entry order is lexicographic with
    # the latest state fastest, so reshape(-1, m) groups by terminal state
    weights = pi0 * np.exp(log_emissions[0] - log_emissions[0].max())
    norm = weights.sum()
    if not norm > 0:
        raise NumericalError("all prefixes have zero probability at t=0")
    out[0] = weights / norm
    for t in range(1, t_len):
        lik = np.exp(log_emissions[t] - log_emissions[t].max())
        by_prev = weights.reshape(-1, m)  # terminal state of each prefix on the last axis
        weights = (by_prev[:, :, None] * p[None, :, :] * lik[None, None, :]).ravel()
        total = weights.sum()
        if not total > 0:
            raise NumericalError(f"all prefixes have zero probability at t={t}")
        weights /= total  # rescale to dodge underflow; filtering is scale-free
        by_terminal = weights.reshape(-1, m).sum(axis=0)
        out[t] = by_terminal / by_terminal.sum()
    return out


# ---------------------------------------------------------------------------
# grid posterior oracle


def grid_posterior(
    log_prior: Callable[[float], float],
    log_lik: Callable[[float], float],
    grid: np.ndarray,
) -> np.ndarray:
    """Normalized prior x likelihood on a 1-D lattice.

    The endpoint cells must carry negligible mass (< 1e-10 each after
    normalization), otherwise the grid is judged too narrow and the caller is
    told to widen it.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 10:
        raise ParameterError("grid must be a 1-D lattice with at least 10 points")
    log_post = np.array([log_prior(x) + log_lik(x) for x in grid])
    if not np.any(np.isfinite(log_post)):
        raise NumericalError("posterior is zero everywhere on the grid")
    probs = np.exp(log_post - logsumexp(log_post))
    probs /= probs.sum()
    if probs[0] > 1e-10 or probs[-1] > 1e-10:
        raise NumericalError(
            "grid endpoints carry non-negligible posterior mass; widen the grid"
        )
    return probs
