"""Monte-Carlo checks of the Radon-Nikodym identities between the averaged network
law and the reference product law.

All likelihood ratios are handled in log domain.  Replicates are drawn in fixed
blocks from counter-based streams, so reports do not depend on thread count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import CorrelationKernel, ModelParams
from .network import (
    PathConfiguration,
    build_torus_spectrum,
    psi_array,
    sample_weight_batch,
    simulate_network_batch,
    simulate_reference_batch,
)
from .rate import gamma_n_values
from .streams import map_chunks, stream

log = logging.getLogger(__name__)

WARN_NATS = 50.0

# address tags keep the two ensembles of a pushforward check independent
_TAG_RN, _TAG_REFERENCE, _TAG_NETWORK = 0, 1, 2


@dataclass
class RNReport:
    u: PathConfiguration
    mc_estimate: float
    mc_stderr: float
    analytic: float
    log_ratio: float
    z_score: float
    samples: int
    seed: int


@dataclass
class PushforwardReport:
    functional: str
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    z_score: float
    samples: int
    seed: int
    max_abs_log_weight: float
    unreliable: bool


def log_mean_exp(x: np.ndarray) -> tuple[float, float]:
    """Log of the mean of ``exp(x)`` and its delta-method standard error."""
    x = np.asarray(x, dtype=float)
    top = x.max()
    w = np.exp(x - top)
    mean = w.mean()
    se = w.std(ddof=1) / (math.sqrt(len(w)) * mean) if len(w) > 1 else math.nan
    return float(top + math.log(mean)), float(se)


def rn_exponents(u: np.ndarray, J: np.ndarray, theta_dev: np.ndarray, p: ModelParams) -> np.ndarray:
    """Exponent of the Radon-Nikodym integrand for each weight draw.

    ``G^i_t = sum_j J_ij f(u^j_{t-1}) + (theta^i - theta_bar)``: the fluctuation of
    the injected current enters alongside the weight-driven field.
    """
    fu = p.gain(u[:, :-1])
    v = psi_array(u, p.gamma, p.theta_bar)[:, 1:]
    G = np.einsum("bij,jt->bit", J, fu) + theta_dev[..., None]
    return (np.einsum("jt,bjt->b", v, G) - 0.5 * np.einsum("bjt,bjt->b", G, G)) / p.sigma**2


def rn_mc_estimate(
    u: PathConfiguration,
    K: CorrelationKernel,
    p: ModelParams,
    samples: int,
    seed: int,
    threads: int = 1,
    stream_index: int = 0,
) -> tuple[float, float]:
    """Log of the mean of the integrand over ``samples`` weight and threshold draws."""
    if samples < 2:
        raise ConfigError("rn_mc_estimate needs at least 2 samples")
    spec = build_torus_spectrum(K, p)

    def block(i, size):
        J = sample_weight_batch(spec, stream(seed, "weights", _TAG_RN, stream_index, i), size)
        dev = p.theta_std * stream(seed, "theta", _TAG_RN, stream_index, i).standard_normal((size, p.N))
        return rn_exponents(u.values, J, dev, p)

    return log_mean_exp(np.concatenate(map_chunks(block, samples, threads)))


def rn_analytic(u: PathConfiguration, K: CorrelationKernel, p: ModelParams) -> float:
    """``N * Gamma_[n]`` at the empirical measure of ``u``."""
    return float(p.N * gamma_n_values(u.values, K, p))


def rn_check(
    u: PathConfiguration,
    K: CorrelationKernel,
    p: ModelParams,
    samples: int,
    seed: int,
    threads: int = 1,
    stream_index: int = 0,
) -> RNReport:
    est, se = rn_mc_estimate(u, K, p, samples, seed, threads, stream_index)
    an = rn_analytic(u, K, p)
    z = (est - an) / se if se > 0 else (0.0 if est == an else math.inf)
    return RNReport(u, est, se, an, est - an, z, samples, seed)


@dataclass(frozen=True)
class Functional:
    """Bounded functional of an empirical measure.

    ``mean_f``: average of f(u_t^j) over neurons.  ``lag_corr``: average of
    f(u_t^j) f(u_t^{j+lag}).  ``halfspace``: indicator of ``<weights, c> >= offset``.
    ``one``: the constant 1.
    """

    kind: str = "one"
    t: int = 1
    lag: int = 1
    weights: tuple = ()
    offset: float = 0.0

    def __call__(self, values: np.ndarray, p: ModelParams) -> np.ndarray:
        batch = values.shape[:-2]
        if self.kind == "one":
            return np.ones(batch)
        if self.kind == "mean_f":
            return p.gain(values[..., self.t]).mean(axis=-1)
        if self.kind == "lag_corr":
            f = p.gain(values[..., self.t])
            return (f * np.roll(f, -self.lag, axis=-1)).mean(axis=-1)
        if self.kind == "halfspace":
            c = p.j_bar * p.gain(values[..., :-1]).mean(axis=-2)
            w = np.broadcast_to(np.asarray(self.weights or (1.0,), dtype=float), (p.T,))
            return (c @ w >= self.offset).astype(float)
        raise ConfigError(f"unknown functional {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "mean_f":
            return f"mean_f(t={self.t})"
        if self.kind == "lag_corr":
            return f"lag_corr(t={self.t},lag={self.lag})"
        if self.kind == "halfspace":
            return f"halfspace(offset={self.offset})"
        return self.kind


def pushforward_check(
    F: Functional,
    K: CorrelationKernel,
    p: ModelParams,
    samples: int,
    seed: int,
    threads: int = 1,
    warn_nats: float = WARN_NATS,
) -> PushforwardReport:
    """Compare ``E_R[F exp(N Gamma_[n])]`` (reference paths) with ``E_Pi[F]`` (coupled network)."""
    if samples < 2:
        raise ConfigError("pushforward_check needs at least 2 samples")
    spec = build_torus_spectrum(K, p)

    def lhs_block(i, size):
        Y = simulate_reference_batch(p, seed, (_TAG_REFERENCE, i), size)
        return F(Y, p), p.N * gamma_n_values(Y, K, p)

    def rhs_block(i, size):
        J = sample_weight_batch(spec, stream(seed, "weights", _TAG_NETWORK, i), size)
        U = simulate_network_batch(p, J, seed, (_TAG_NETWORK, i))
        return F(U, p)

    lhs_parts = map_chunks(lhs_block, samples, threads)
    vals = np.concatenate([a for a, _ in lhs_parts])
    logw = np.concatenate([b for _, b in lhs_parts])
    rhs_vals = np.concatenate(map_chunks(rhs_block, samples, threads))

    top = float(np.max(np.abs(logw)))
    unreliable = top > warn_nats
    if unreliable:
        log.warning("log importance weights reach %.1f nats; estimate flagged unreliable", top)
    lhs_terms = vals * np.exp(logw)
    lhs, lhs_se = lhs_terms.mean(), lhs_terms.std(ddof=1) / math.sqrt(samples)
    rhs, rhs_se = rhs_vals.mean(), rhs_vals.std(ddof=1) / math.sqrt(samples)
    comb = math.hypot(lhs_se, rhs_se)
    z = (lhs - rhs) / comb if comb > 0 else (0.0 if lhs == rhs else math.inf)
    return PushforwardReport(
        F.label, float(lhs), float(lhs_se), float(rhs), float(rhs_se), float(z),
        int(samples), int(seed), top, unreliable,
    )
