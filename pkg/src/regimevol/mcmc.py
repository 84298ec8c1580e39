"""Generic MCMC machinery: Metropolis-Hastings kernel, conjugate updates,
chain storage and summaries.

All target evaluations happen in log space.  Positive-constrained parameters
are proposed with a Gaussian random walk on a log (or shifted-log) scale with
the Jacobian folded into the transformed target; step scales adapt toward 30%
acceptance during burn-in only (Robbins-Monro) and are frozen afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .distributions import InvGammaParams, inv_gamma_sample
from .errors import NumericalError, ParameterError

__all__ = [
    "Proposal",
    "MhKernel",
    "random_walk_proposal",
    "mh_step",
    "AdaptiveRw",
    "NormalNormalPosterior",
    "normal_normal_update",
    "inv_gamma_normal_update",
    "ModelState",
    "Chain",
    "run_chain",
    "ParamSummary",
    "chain_summary",
]


# ---------------------------------------------------------------------------
# Metropolis-Hastings


@dataclass
class Proposal:
    """Proposal mechanism: a sampler plus an optional log density.

    ``sample(current, scale, rng)`` draws a candidate.  ``log_density(value,
    given, scale)`` supplies the Hastings correction; ``None`` declares the
    proposal symmetric, in which case the correction cancels.
    """

    sample: Callable[[float, float, np.random.Generator], float]
    log_density: Callable[[float, float, float], float] | None = None


def random_walk_proposal() -> Proposal:
    return Proposal(sample=lambda current, scale, rng: current + scale * rng.normal())


@dataclass
class MhKernel:
    log_target: Callable[[float], float]
    proposal: Proposal
    step_scale: float = 1.0


def mh_step(
    current: float, kernel: MhKernel, rng: np.random.Generator
) -> tuple[float, bool]:
    """One Metropolis-Hastings step; returns (new value, accepted flag).

    The acceptance ratio uses the proposal density both ways when one is
    given.  A non-finite target at the candidate rejects instead of raising,
    so zero-density regions act as hard walls.
    """
    lp_current = kernel.log_target(current)
    candidate = kernel.proposal.sample(current, kernel.step_scale, rng)
    lp_candidate = kernel.log_target(candidate)
    if not np.isfinite(lp_candidate):
        return current, False
    log_r = lp_candidate - lp_current
    if kernel.proposal.log_density is not None:
        log_r += kernel.proposal.log_density(current, candidate, kernel.step_scale)
        log_r -= kernel.proposal.log_density(candidate, current, kernel.step_scale)
    if not np.isfinite(lp_current):  # escaping a zero-density start is always an improvement
        return candidate, True
    if math.log(rng.random()) < log_r:
        return candidate, True
    return current, False


class AdaptiveRw:
    """Random-walk MH on a transformed scale with burn-in step adaptation.

    ``transform='log'`` walks in log(v), ``'log_shift'`` in log(v - shift)
    (used for the variance multipliers with support (1, inf)), ``'identity'``
    in v itself.  The Jacobian of the transform is added to the transformed
    log target, so ``step`` samples the intended distribution on the original
    scale.  While ``adapt=True`` the log step scale follows a Robbins-Monro
    recursion toward the target acceptance rate and must be frozen (pass
    ``adapt=False``) once draws are being kept.
    """

    def __init__(
        self,
        scale: float = 0.5,
        transform: str = "identity",
        shift: float = 1.0,
        target_accept: float = 0.3,
    ) -> None:
        if transform not in ("identity", "log", "log_shift"):
            raise ParameterError(f"unknown transform {transform!r}")
        if not scale > 0:
            raise ParameterError("step scale must be > 0")
        self.scale = scale
        self.transform = transform
        self.shift = shift
        self.target_accept = target_accept
        self.accepted = 0
        self.attempts = 0
        self._adapt_steps = 0

    # transform helpers -----------------------------------------------------
    def _to_x(self, v: float) -> float:
        if self.transform == "log":
            return math.log(v)
        if self.transform == "log_shift":
            return math.log(v - self.shift)
        return v

    def _to_v(self, x: float) -> float:
        if self.transform == "log":
            return math.exp(x)
        if self.transform == "log_shift":
            return self.shift + math.exp(x)
        return x

    def _log_jacobian(self, x: float) -> float:
        # dv/dx = e^x for both log transforms, 1 for identity
        return x if self.transform != "identity" else 0.0

    # ------------------------------------------------------------------------
    def step(
        self,
        current: float,
        log_target: Callable[[float], float],
        rng: np.random.Generator,
        adapt: bool = False,
    ) -> float:
        x = self._to_x(current)
        x_new = x + self.scale * rng.normal()
        v_new = self._to_v(x_new)
        lp_cur = log_target(current) + self._log_jacobian(x)
        lp_new = log_target(v_new) + self._log_jacobian(x_new)
        log_r = lp_new - lp_cur if np.isfinite(lp_new) else -math.inf
        accept_prob = min(1.0, math.exp(min(log_r, 0.0)))
        self.attempts += 1
        out = current
        if np.isfinite(lp_new) and (
            not np.isfinite(lp_cur) or math.log(rng.random()) < log_r
        ):
            self.accepted += 1
            out = v_new
        if adapt:
            self._adapt_steps += 1
            gain = 1.0 / (1.0 + self._adapt_steps) ** 0.66
            self.scale *= math.exp(gain * (accept_prob - self.target_accept))
            self.scale = min(max(self.scale, 1e-4), 1e4)
        return out

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else math.nan


# ---------------------------------------------------------------------------
# conjugate updates


@dataclass
class NormalNormalPosterior:
    """Sufficient statistics for the known-variance Gaussian mean update.

    Data y_i ~ N(mu, sigma_sq) with sigma_sq known and prior
    mu ~ N(mu0, 1/k); the posterior is
    N((n ybar + mu0 k sigma_sq)/(n + k sigma_sq), sigma_sq/(n + k sigma_sq)).
    """

    n: int
    ybar: float
    sigma_sq: float
    k: float
    mu0: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ParameterError("observation count must be >= 0")
        if not self.sigma_sq > 0 or not self.k > 0:
            raise ParameterError("sigma_sq and prior precision k must be > 0")

    @property
    def posterior_mean(self) -> float:
        return (self.n * self.ybar + self.mu0 * self.k * self.sigma_sq) / (
            self.n + self.k * self.sigma_sq
        )

    @property
    def posterior_var(self) -> float:
        return self.sigma_sq / (self.n + self.k * self.sigma_sq)


def normal_normal_update(post: NormalNormalPosterior, rng: np.random.Generator) -> float:
    """One exact draw from the conjugate posterior of the Gaussian mean."""
    return post.posterior_mean + math.sqrt(post.posterior_var) * rng.normal()


def inv_gamma_normal_update(
    residual_sq_sum: float,
    n: int,
    prior: InvGammaParams,
    rng: np.random.Generator,
) -> float:
    """One exact draw of a Gaussian variance with inverse-Gamma prior.

    Posterior is invGamma(n/2 + shape, residual_sq_sum/2 + rate).
    """
    if n < 0 or residual_sq_sum < 0:
        raise ParameterError("need n >= 0 and a nonnegative residual sum of squares")
    post = InvGammaParams(n / 2.0 + prior.shape, residual_sq_sum / 2.0 + prior.rate)
    return float(inv_gamma_sample(post, rng))


# ---------------------------------------------------------------------------
# chains


@dataclass
class ModelState:
    """One full posterior draw: state path, transition matrix, model parameters."""

    path: np.ndarray  # (T,) int, labels 1..M
    transition: np.ndarray  # (M, M) row-stochastic
    params: Any

    def to_param_dict(self) -> dict[str, float]:
        out = dict(self.params.to_param_dict())
        m = self.transition.shape[0]
        for i in range(m):
            for j in range(m):
                out[f"p_{i + 1}{j + 1}"] = float(self.transition[i, j])
        return out


@dataclass
class Chain:
    """Post-burn-in draws plus acceptance tallies.

    ``draws`` holds exactly the last ``total - burn_in`` states produced by
    the sweep; ``acceptance`` maps parameter names to (accepted, attempted).
    """

    draws: list
    burn_in: int
    total: int
    acceptance: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.burn_in < self.total:
            raise ParameterError(
                f"burn-in ({self.burn_in}) must be smaller than total iterations ({self.total})"
            )

    def acceptance_rate(self, name: str) -> float:
        acc, att = self.acceptance[name]
        return acc / att if att else math.nan


def run_chain(
    sweep: Callable[[Any, np.random.Generator], Any],
    init: Any,
    n_iter: int,
    burn_in: int,
    rng: np.random.Generator,
    acceptance: Callable[[], dict[str, tuple[int, int]]] | None = None,
) -> Chain:
    """Apply ``sweep`` n_iter times from ``init``, keeping the last n_iter - burn_in states.

    ``sweep`` must return a fresh state (stored draws are not copied).  A
    sweep failure aborts with the iteration index attached; samplers tag the
    failing update stage in the underlying error.
    """
    if not 0 <= burn_in < n_iter:
        raise ParameterError(f"need 0 <= burn_in < n_iter, got J={burn_in} N={n_iter}")
    state = init
    draws: list = []
    for it in range(n_iter):
        try:
            state = sweep(state, rng)
        except Exception as exc:
            raise NumericalError(f"sweep failed at iteration {it}: {exc}") from exc
        if it >= burn_in:
            draws.append(state)
    return Chain(
        draws=draws,
        burn_in=burn_in,
        total=n_iter,
        acceptance=dict(acceptance()) if acceptance is not None else {},
    )


@dataclass
class ParamSummary:
    mean: float
    sd: float
    hist_counts: np.ndarray
    hist_edges: np.ndarray
    acceptance_rate: float | None = None


def chain_summary(chain: Chain, bins: int = 40) -> dict[str, ParamSummary]:
    """Post-burn-in mean, sd, histogram and acceptance rate per scalar parameter.

    Draws may be ModelState objects or plain name->value mappings.
    """
    if not chain.draws:
        raise ParameterError("cannot summarize an empty chain")
    rows = [d.to_param_dict() if hasattr(d, "to_param_dict") else d for d in chain.draws]
    out: dict[str, ParamSummary] = {}
    for name in rows[0]:
        values = np.array([r[name] for r in rows], dtype=float)
        counts, edges = np.histogram(values, bins=bins)
        rate = chain.acceptance_rate(name) if name in chain.acceptance else None
        out[name] = ParamSummary(
            mean=float(values.mean()),
            sd=float(values.std()),
            hist_counts=counts,
            hist_edges=edges,
            acceptance_rate=rate,
        )
    return out
