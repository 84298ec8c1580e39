"""Markov-switching jump-diffusion model: observations are state-dependent
Gaussians plus a symmetric-Gamma jump sum, with state variances forced upward
through multiplicative factors h*_j > 1 and jump intensities ordered by
disjoint uniform prior intervals.

Inference is Metropolis-within-Gibbs.  Per sweep: state path (forward filter,
backward draw), transition matrix (Dirichlet), then per state the mean
(conjugate when the state carries no jumps, MH otherwise), the base variance,
the variance multipliers, the latent jump counts (exact truncated discrete
draw) and the Poisson rates (interval-truncated MH).  The state-j conditionals
for sigma1^2 and h*_j use state-j data only, with the derived variances of all
higher states moving along; that is the scheme the model defines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import poisson

from .distributions import (
    FrechetParams,
    InvGammaParams,
    frechet_logpdf,
    frechet_sample,
    gaussian_logpdf,
    jump_convolved_logpdf,
)
from .errors import ParameterError
from .mcmc import (
    AdaptiveRw,
    ModelState,
    NormalNormalPosterior,
    inv_gamma_normal_update,
    normal_normal_update,
)
from .regime import (
    count_transitions,
    hamilton_filter,
    sample_state_path,
    sample_transition_matrix,
)

__all__ = [
    "JumpParams",
    "JumpPriors",
    "jump_emission_logpdf",
    "jump_state_loglik",
    "sample_mu_j",
    "sample_sigma1_sq",
    "sample_h_star_j",
    "jump_count_weights",
    "sample_n_jumps_j",
    "sample_theta_j",
    "jump_sweep",
    "JumpGibbsSampler",
    "initial_jump_state",
    "default_u_ladder",
    "default_dirichlet_rows",
]


@dataclass
class JumpParams:
    """One draw of the jump model's parameters.

    ``sigma1_sq`` and the multipliers ``h_star`` (one per state above the
    first, each > 1) induce the strictly increasing state variances
    sigma_j^2 = sigma1^2 * prod(h*_2..h*_j).  ``n_jumps`` holds the current
    per-state latent jump counts; ``b`` is the fixed exponential amplitude
    rate shared by all states.
    """

    mu: np.ndarray
    sigma1_sq: float
    h_star: np.ndarray
    theta: np.ndarray
    n_jumps: np.ndarray
    b: float

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=float)
        self.h_star = np.asarray(self.h_star, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self.n_jumps = np.asarray(self.n_jumps, dtype=int)
        m = self.mu.size
        if self.h_star.size != m - 1:
            raise ParameterError(f"need {m - 1} variance multipliers for {m} states")
        if self.theta.size != m or self.n_jumps.size != m:
            raise ParameterError("theta and n_jumps must have one entry per state")
        if not self.sigma1_sq > 0:
            raise ParameterError(f"sigma1_sq must be > 0, got {self.sigma1_sq}")
        if np.any(self.h_star <= 1.0):
            raise ParameterError("every variance multiplier h* must exceed 1")
        if np.any(self.theta < 0) or np.any(np.diff(self.theta) < 0):
            raise ParameterError("jump intensities must be nonnegative and nondecreasing")
        if np.any(self.n_jumps < 0):
            raise ParameterError("jump counts must be nonnegative")
        if not self.b > 0:
            raise ParameterError(f"jump amplitude rate b must be > 0, got {self.b}")

    @property
    def n_states(self) -> int:
        return self.mu.size

    @property
    def sigma_sq(self) -> np.ndarray:
        """Derived state variances sigma_1^2 < ... < sigma_M^2."""
        return self.sigma1_sq * np.cumprod(np.concatenate(([1.0], self.h_star)))

    def to_param_dict(self) -> dict[str, float]:
        out: dict[str, float] = {}
        sig = self.sigma_sq
        for j in range(self.n_states):
            out[f"mu_{j + 1}"] = float(self.mu[j])
            out[f"sigma_sq_{j + 1}"] = float(sig[j])
            out[f"theta_{j + 1}"] = float(self.theta[j])
            out[f"n_jumps_{j + 1}"] = float(self.n_jumps[j])
        for j in range(2, self.n_states + 1):
            out[f"h_star_{j}"] = float(self.h_star[j - 2])
        return out


def default_u_ladder(n_states: int) -> np.ndarray:
    """Default intensity-interval endpoints 0.5, 1, 2, 4, ... (doubling)."""
    return 0.5 * 2.0 ** np.arange(n_states)


def default_dirichlet_rows(n_states: int, diag: float = 8.0) -> np.ndarray:
    """Uniform rows for states 1-2, diagonally weighted rows above.

    The extra diagonal mass makes the model reluctant to leave the upper
    volatility states.
    """
    rows = np.ones((n_states, n_states))
    for j in range(2, n_states):
        rows[j, j] = diag
    return rows


@dataclass
class JumpPriors:
    """Hyperparameters of the jump model.

    ``u`` are the increasing interval endpoints of the uniform intensity
    priors (theta_j lives on (u_{j-1}, u_j]); ``dirichlet_rows`` the per-row
    transition-prior concentrations; ``fix_mean_zero`` pins every state mean
    at zero (the default for this model).
    """

    k: float
    sigma_prior: InvGammaParams
    frechet: FrechetParams
    u: np.ndarray
    dirichlet_rows: np.ndarray
    fix_mean_zero: bool = True

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float)
        self.dirichlet_rows = np.asarray(self.dirichlet_rows, dtype=float)
        if not self.k > 0:
            raise ParameterError(f"mean-prior precision k must be > 0, got {self.k}")
        if np.any(self.u <= 0) or np.any(np.diff(self.u) <= 0):
            raise ParameterError("intensity interval endpoints u must be positive and increasing")
        if self.dirichlet_rows.ndim != 2 or np.any(self.dirichlet_rows <= 0):
            raise ParameterError("Dirichlet prior rows must be a positive matrix")

    @property
    def n_states(self) -> int:
        return self.u.size

    def theta_interval(self, j: int) -> tuple[float, float]:
        """Support (lo, hi] of theta_j, 1-based state index."""
        return (0.0 if j == 1 else float(self.u[j - 2])), float(self.u[j - 1])


# ---------------------------------------------------------------------------
# likelihood pieces


def jump_emission_logpdf(y, j: int, params: JumpParams):
    """Log density of one observation in state j (1-based).

    Gaussian when the state's jump count is zero, otherwise the
    Normal (x) symGamma convolution with that count.
    """
    var = params.sigma_sq[j - 1]
    mu = params.mu[j - 1]
    n = int(params.n_jumps[j - 1])
    if n == 0:
        return gaussian_logpdf(y, mu, var)
    return jump_convolved_logpdf(y, mu, math.sqrt(var), n, params.b)


def jump_state_loglik(data: np.ndarray, j: int, params: JumpParams) -> float:
    if data.size == 0:
        return 0.0
    return float(np.sum(jump_emission_logpdf(data, j, params)))


def _conv_loglik(data: np.ndarray, mu: float, var: float, n: int, b: float) -> float:
    if data.size == 0:
        return 0.0
    if n == 0:
        return float(np.sum(gaussian_logpdf(data, mu, var)))
    return float(np.sum(jump_convolved_logpdf(data, mu, math.sqrt(var), n, b)))


def _inv_gamma_logpdf_unnorm(s: float, prior: InvGammaParams) -> float:
    return -(prior.shape + 1.0) * math.log(s) - prior.rate / s


# ---------------------------------------------------------------------------
# per-parameter updates


def sample_mu_j(
    data_j: np.ndarray,
    j: int,
    params: JumpParams,
    priors: JumpPriors,
    rng: np.random.Generator,
    sampler: AdaptiveRw | None = None,
    adapt: bool = False,
) -> float:
    """State-j mean: exact conjugate draw when N_j = 0, otherwise one MH step."""
    data_j = np.asarray(data_j, dtype=float)
    var = float(params.sigma_sq[j - 1])
    n_jumps = int(params.n_jumps[j - 1])
    if n_jumps == 0:
        n = data_j.size
        post = NormalNormalPosterior(
            n=n, ybar=float(data_j.mean()) if n else 0.0,
            sigma_sq=var, k=priors.k, mu0=0.0,
        )
        return normal_normal_update(post, rng)
    sd = math.sqrt(var)

    def log_target(mu: float) -> float:
        prior = -0.5 * priors.k * mu * mu
        if data_j.size == 0:
            return prior
        return prior + float(
            np.sum(jump_convolved_logpdf(data_j, mu, sd, n_jumps, params.b))
        )

    sampler = sampler or AdaptiveRw(scale=0.25)
    return sampler.step(float(params.mu[j - 1]), log_target, rng, adapt)


def sample_sigma1_sq(
    data_1: np.ndarray,
    params: JumpParams,
    priors: JumpPriors,
    rng: np.random.Generator,
    sampler: AdaptiveRw | None = None,
    adapt: bool = False,
) -> float:
    """Base variance: conjugate inverse-Gamma draw when state 1 has no jumps,
    else a log-scale MH step against prior x state-1 likelihood.  The caller's
    derived sigma_j^2 move with the returned value through the h* products.
    """
    data_1 = np.asarray(data_1, dtype=float)
    mu1 = float(params.mu[0])
    if int(params.n_jumps[0]) == 0:
        rss = float(np.sum((data_1 - mu1) ** 2))
        return inv_gamma_normal_update(rss, data_1.size, priors.sigma_prior, rng)
    n1 = int(params.n_jumps[0])

    def log_target(s: float) -> float:
        if not s > 0:
            return -math.inf
        return _inv_gamma_logpdf_unnorm(s, priors.sigma_prior) + _conv_loglik(
            data_1, mu1, s, n1, params.b
        )

    sampler = sampler or AdaptiveRw(scale=0.4, transform="log")
    return sampler.step(float(params.sigma1_sq), log_target, rng, adapt)


def sample_h_star_j(
    data_j: np.ndarray,
    j: int,
    params: JumpParams,
    priors: JumpPriors,
    rng: np.random.Generator,
    sampler: AdaptiveRw | None = None,
    adapt: bool = False,
) -> float:
    """Variance multiplier of state j >= 2; always > 1 on exit.

    With no observations the Frechet prior is drawn exactly.  With N_j = 0
    the target is the analytic h^(-n/2) exp(-ss/(2h)) x Frechet form on the
    residuals scaled by the state-(j-1) variance; with jumps present the
    convolution likelihood replaces it.  Proposals walk log(h* - 1), so
    values at or below 1 cannot be proposed and carry zero density anyway.
    """
    if not 2 <= j <= params.n_states:
        raise ParameterError(f"h* index must lie in 2..{params.n_states}, got {j}")
    data_j = np.asarray(data_j, dtype=float)
    if data_j.size == 0:
        return float(frechet_sample(priors.frechet, rng))
    lower_var = float(params.sigma_sq[j - 2])
    mu_j = float(params.mu[j - 1])
    n_jumps = int(params.n_jumps[j - 1])
    if n_jumps == 0:
        ss = float(np.sum((data_j - mu_j) ** 2)) / lower_var
        n_j = data_j.size

        def log_target(h: float) -> float:
            base = frechet_logpdf(h, priors.frechet)
            if base == -math.inf:
                return base
            return base - 0.5 * n_j * math.log(h) - 0.5 * ss / h

    else:

        def log_target(h: float) -> float:
            base = frechet_logpdf(h, priors.frechet)
            if base == -math.inf:
                return base
            return base + _conv_loglik(data_j, mu_j, lower_var * h, n_jumps, params.b)

    sampler = sampler or AdaptiveRw(scale=0.4, transform="log_shift", shift=1.0)
    return sampler.step(float(params.h_star[j - 2]), log_target, rng, adapt)


def _poisson_n_max(theta: float) -> int:
    """Smallest count whose Poisson upper tail is below 1e-13 (< the 1e-12 budget)."""
    return max(int(poisson.isf(1e-13, theta)) + 1, 4)


def jump_count_weights(
    data_j: np.ndarray, j: int, params: JumpParams, priors: JumpPriors
) -> np.ndarray:
    """Normalized discrete conditional of N_j over 0..N_max.

    Weights are Poisson(N; theta_j) times the state-j likelihood at count N,
    computed in log space.  N_max truncates the prior tail below 1e-12;
    enumeration stops early once the weights have fallen 46 nats below the
    running maximum and keep falling, which leaves relative mass below
    categorical-draw resolution.
    """
    data_j = np.asarray(data_j, dtype=float)
    theta = float(params.theta[j - 1])
    var = float(params.sigma_sq[j - 1])
    mu = float(params.mu[j - 1])
    n_max = _poisson_n_max(theta)
    log_w = np.full(n_max + 1, -np.inf)
    log_pois = -theta
    best = -math.inf
    declines = 0
    last = n_max
    for n in range(n_max + 1):
        if n > 0:
            log_pois += math.log(theta) - math.log(n)
        log_w[n] = log_pois + _conv_loglik(data_j, mu, var, n, params.b)
        if log_w[n] > best:
            best = log_w[n]
            declines = 0
        else:
            declines += 1
        if n > theta and declines >= 3 and log_w[n] < best - 46.0:
            last = n
            break
    log_w = log_w[: last + 1]
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def sample_n_jumps_j(
    data_j: np.ndarray,
    j: int,
    params: JumpParams,
    priors: JumpPriors,
    rng: np.random.Generator,
) -> int:
    """Exact draw from the truncated discrete conditional of the state-j jump count."""
    w = jump_count_weights(data_j, j, params, priors)
    return int(np.searchsorted(np.cumsum(w), rng.random()))


def sample_theta_j(
    j: int,
    params: JumpParams,
    priors: JumpPriors,
    rng: np.random.Generator,
    sampler: AdaptiveRw | None = None,
    adapt: bool = False,
) -> float:
    """Poisson rate of state j: log-scale MH on the interval (u_{j-1}, u_j].

    The conditional is Poisson(N_j; theta) restricted to the prior interval;
    proposals outside it are rejected, which keeps the rates ordered across
    states by construction.
    """
    lo, hi = priors.theta_interval(j)
    n_j = int(params.n_jumps[j - 1])

    def log_target(theta: float) -> float:
        if not lo < theta <= hi:
            return -math.inf
        return n_j * math.log(theta) - theta

    sampler = sampler or AdaptiveRw(scale=0.5, transform="log")
    return sampler.step(float(params.theta[j - 1]), log_target, rng, adapt)


# ---------------------------------------------------------------------------
# full sweep


class JumpGibbsSampler:
    """Holds the data, priors, adaptive step scales and filtered-probability
    accumulator for one chain of the jump model.

    ``sweep`` is handed to run_chain; adaptation runs for the first
    ``adapt_iters`` sweeps (the burn-in) and freezes afterwards, from when the
    per-sweep filtered probabilities also start accumulating into
    ``mean_filtered_probs``.
    """

    def __init__(
        self,
        data: np.ndarray,
        priors: JumpPriors,
        pi0: np.ndarray | None = None,
        adapt_iters: int = 0,
        step_scale: float = 0.4,
    ) -> None:
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != 1 or self.data.size < 2:
            raise ParameterError("need a 1-D series of at least two observations")
        self.priors = priors
        m = priors.n_states
        self.n_states = m
        self.pi0 = np.full(m, 1.0 / m) if pi0 is None else np.asarray(pi0, dtype=float)
        self.adapt_iters = adapt_iters
        self.samplers: dict[str, AdaptiveRw] = {
            "sigma1_sq": AdaptiveRw(step_scale, "log")
        }
        for j in range(2, m + 1):
            self.samplers[f"h_star_{j}"] = AdaptiveRw(step_scale, "log_shift", shift=1.0)
        for j in range(1, m + 1):
            self.samplers[f"theta_{j}"] = AdaptiveRw(step_scale, "log")
            if not priors.fix_mean_zero:
                self.samplers[f"mu_{j}"] = AdaptiveRw(0.25 * math.sqrt(np.var(self.data)))
        self._sweeps = 0
        self._filtered_sum = np.zeros((self.data.size, m))
        self._filtered_draws = 0

    # ------------------------------------------------------------------
    def emission_matrix(self, params: JumpParams) -> np.ndarray:
        logem = np.empty((self.data.size, self.n_states))
        for j in range(1, self.n_states + 1):
            logem[:, j - 1] = jump_emission_logpdf(self.data, j, params)
        return logem

    def sweep(self, state: ModelState, rng: np.random.Generator) -> ModelState:
        adapt = self._sweeps < self.adapt_iters
        params: JumpParams = state.params
        stage = "state_path"
        try:
            filt = hamilton_filter(
                self.emission_matrix(params), self.data.size, state.transition, self.pi0
            )
            path = sample_state_path(filt, state.transition, rng)

            stage = "transition_matrix"
            counts = count_transitions(path, self.n_states)
            transition = sample_transition_matrix(counts, self.priors.dirichlet_rows, rng)

            groups = [self.data[path == j] for j in range(1, self.n_states + 1)]

            if not self.priors.fix_mean_zero:
                mu = params.mu.copy()
                for j in range(1, self.n_states + 1):
                    stage = f"mu_{j}"
                    mu[j - 1] = sample_mu_j(
                        groups[j - 1], j, params, self.priors, rng,
                        self.samplers[f"mu_{j}"], adapt,
                    )
                    params = replace(params, mu=mu.copy())

            stage = "sigma1_sq"
            sigma1_sq = sample_sigma1_sq(
                groups[0], params, self.priors, rng, self.samplers["sigma1_sq"], adapt
            )
            params = replace(params, sigma1_sq=sigma1_sq)

            for j in range(2, self.n_states + 1):
                stage = f"h_star_{j}"
                h = params.h_star.copy()
                h[j - 2] = sample_h_star_j(
                    groups[j - 1], j, params, self.priors, rng,
                    self.samplers[f"h_star_{j}"], adapt,
                )
                params = replace(params, h_star=h)

            n_jumps = params.n_jumps.copy()
            for j in range(1, self.n_states + 1):
                stage = f"n_jumps_{j}"
                n_jumps[j - 1] = sample_n_jumps_j(groups[j - 1], j, params, self.priors, rng)
                params = replace(params, n_jumps=n_jumps.copy())

            theta = params.theta.copy()
            for j in range(1, self.n_states + 1):
                stage = f"theta_{j}"
                theta[j - 1] = sample_theta_j(
                    j, params, self.priors, rng, self.samplers[f"theta_{j}"], adapt
                )
                params = replace(params, theta=theta.copy())
        except Exception as exc:
            raise type(exc)(f"[{stage}] {exc}") from exc

        self._sweeps += 1
        if not adapt:
            self._filtered_sum += filt.probs
            self._filtered_draws += 1
        return ModelState(
            path=path.astype(np.int16), transition=transition, params=params
        )

    # ------------------------------------------------------------------
    def acceptance(self) -> dict[str, tuple[int, int]]:
        return {name: (s.accepted, s.attempts) for name, s in self.samplers.items()}

    @property
    def mean_filtered_probs(self) -> np.ndarray:
        """Filtered state probabilities averaged over post-adaptation sweeps."""
        if self._filtered_draws == 0:
            raise ParameterError("no post-burn-in sweeps have run yet")
        return self._filtered_sum / self._filtered_draws


def jump_sweep(
    state: ModelState,
    data: np.ndarray,
    priors: JumpPriors,
    rng: np.random.Generator,
    pi0: np.ndarray | None = None,
) -> ModelState:
    """One non-adaptive Gibbs sweep (convenience wrapper around the sampler class)."""
    sampler = JumpGibbsSampler(data, priors, pi0=pi0)
    return sampler.sweep(state, rng)


def initial_jump_state(
    data: np.ndarray, priors: JumpPriors, b: float = 40.0, diag: float = 0.8
) -> ModelState:
    """Deterministic starting point: observations bucketed into M volatility
    quantiles by |y - median| define the initial path; bucket variances seed
    sigma1^2 and the multipliers; intensities start at their interval midpoints.
    """
    data = np.asarray(data, dtype=float)
    m = priors.n_states
    t_len = data.size
    dev = np.abs(data - np.median(data))
    ranks = np.argsort(np.argsort(dev))
    path = 1 + np.minimum((ranks * m) // t_len, m - 1)
    bucket_var = np.array([
        max(np.var(data[path == j]), np.var(data) * 1e-4) if np.any(path == j) else np.var(data)
        for j in range(1, m + 1)
    ])
    sigma1_sq = float(bucket_var[0])
    h_star = np.maximum(bucket_var[1:] / bucket_var[:-1], 1.05)
    theta = np.array([0.5 * (lo + hi) for lo, hi in (priors.theta_interval(j) for j in range(1, m + 1))])
    transition = np.full((m, m), (1.0 - diag) / (m - 1) if m > 1 else 0.0)
    np.fill_diagonal(transition, diag if m > 1 else 1.0)
    params = JumpParams(
        mu=np.zeros(m),
        sigma1_sq=sigma1_sq,
        h_star=h_star,
        theta=theta,
        n_jumps=np.zeros(m, dtype=int),
        b=b,
    )
    return ModelState(path=path.astype(np.int16), transition=transition, params=params)
