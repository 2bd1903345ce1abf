"""Empirical measures of network configurations and the statistics the rate function uses.

The empirical measure of a configuration is the uniform mixture of its N cyclic
shifts, so every integral against it is an exact average over the torus.  All
array-level helpers accept leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, PSDError
from .measures import StationaryGaussianMeasure
from .model import ModelParams
from .network import PathConfiguration, psi_array
from .spectral import MatrixKernelSequence


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 32

    def __post_init__(self):
        if not 2 <= self.order <= 200:
            raise ConfigError(f"Gauss-Hermite order must be in [2, 200], got {self.order}")


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    config: PathConfiguration
    params: ModelParams


@dataclass(frozen=True, eq=False)
class MeasureStats:
    """``c`` (T,), lag sequences ``M`` and raw innovation moments ``v_second``, ``v_mean`` (T,).

    Empirical measures give periodic sequences on V_n; Gaussian measures give
    non-periodic sequences whose ``tail`` is the large-lag limit.
    """

    c: np.ndarray
    M: MatrixKernelSequence
    v_mean: np.ndarray
    v_second: MatrixKernelSequence
    kind: str = "empirical"


def shift(u: PathConfiguration, m: int) -> PathConfiguration:
    """Row j of the result is row (j + m) mod V_n of ``u``."""
    return PathConfiguration(u.n, u.T, np.roll(u.values, -m, axis=0))


def lag_moments(x: np.ndarray) -> np.ndarray:
    """``R^k_{st} = (1/N) sum_j x_{j,s} x_{j+k,t}`` for k in V_n, FFT order, shape (..., N, T, T).

    Negative lags are filled as transposes so ``R^{-k} = (R^k)^T`` holds exactly.
    """
    N, T = x.shape[-2:]
    n = N // 2
    out = np.empty(x.shape[:-2] + (N, T, T))
    for k in range(n + 1):
        out[..., k, :, :] = np.einsum("...js,...jt->...st", x, np.roll(x, -k, axis=-2)) / N
    for k in range(1, n + 1):
        out[..., N - k, :, :] = np.swapaxes(out[..., k, :, :], -1, -2)
    return out


def stats_from_values(values: np.ndarray, p: ModelParams) -> MeasureStats:
    """Statistics of the empirical measure of configuration(s) ``values`` (..., N, T+1)."""
    fu = p.gain(values[..., :-1])
    v = psi_array(values, p.gamma, p.theta_bar)[..., 1:]
    return MeasureStats(
        c=p.j_bar * fu.mean(axis=-2),
        M=MatrixKernelSequence(lag_moments(fu)),
        v_mean=v.mean(axis=-2),
        v_second=MatrixKernelSequence(lag_moments(v)),
    )


def stats_of_empirical(mu: EmpiricalMeasure) -> MeasureStats:
    return stats_from_values(mu.config.values, mu.params)


@lru_cache(maxsize=16)
def _hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(order)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def _sqrt_2x2(a, b, d):
    """Symmetric square root of [[a, b], [b, d]] (elementwise over arrays)."""
    det = a * d - b * b
    scale = np.maximum(np.abs(a) + np.abs(d), 1e-300)
    if np.any(det < -1e-12 * scale**2) or np.any(a < 0) or np.any(d < 0):
        raise PSDError("2 x 2 marginal covariance is not positive semidefinite")
    s = np.sqrt(np.clip(det, 0.0, None))
    t = np.sqrt(a + d + 2.0 * s)
    safe = np.where(t > 0, t, 1.0)
    r11 = np.where(t > 0, (a + s) / safe, 0.0)
    r12 = np.where(t > 0, b / safe, 0.0)
    r22 = np.where(t > 0, (d + s) / safe, 0.0)
    return r11, r12, r22


def gaussian_pair_expectation(f, m1, m2, a, b, d, order: int = 32):
    """``E[f(X1) f(X2)]`` for (X1, X2) ~ N((m1, m2), [[a, b], [b, d]]), tensor Gauss-Hermite."""
    z, w = _hermite_rule(order)
    r11, r12, r22 = _sqrt_2x2(*np.broadcast_arrays(*(np.asarray(q, dtype=float) for q in (a, b, d))))
    z1 = z[:, None]
    z2 = z[None, :]
    ex = lambda q: np.asarray(q)[..., None, None]
    x1 = ex(m1) + ex(r11) * z1 + ex(r12) * z2
    x2 = ex(m2) + ex(r12) * z1 + ex(r22) * z2
    ww = w[:, None] * w[None, :]
    return np.sum(ww * f(x1) * f(x2), axis=(-2, -1))


def gaussian_expectation(f, m, var, order: int = 32):
    z, w = _hermite_rule(order)
    x = np.asarray(m, dtype=float)[..., None] + np.sqrt(np.asarray(var, dtype=float))[..., None] * z
    return np.sum(w * f(x), axis=-1)


def _centred_to_fft(arr: np.ndarray) -> np.ndarray:
    return np.roll(arr, -(arr.shape[0] // 2), axis=0)


def stats_of_gaussian(
    g: StationaryGaussianMeasure, p: ModelParams, quad: QuadratureSpec = QuadratureSpec()
) -> MeasureStats:
    """Statistics of a stationary Gaussian measure by Gauss-Hermite quadrature.

    ``M`` covers lags up to the support of ``g``'s autocovariance; beyond it the
    two coordinates are independent and ``M`` equals its tail ``E f (E f)^T``.
    """
    T = p.T
    if g.T != T:
        raise ConfigError(f"measure has T={g.T}, parameters have T={T}")
    m = g.mean[:-1]
    C = g.autocov[:, :-1, :-1]
    var = np.diag(C[g.max_lag])
    if np.any(var < 0):
        raise PSDError("negative marginal variance")
    ef = gaussian_expectation(p.gain, m, var, quad.order)
    a = np.broadcast_to(var[:, None], C.shape)
    d = np.broadcast_to(var[None, :], C.shape)
    M = gaussian_pair_expectation(p.gain, m[:, None], m[None, :], a, C, d, quad.order)
    v_mean, v_cov = g.innovation_moments(p)
    v_tail = np.outer(v_mean, v_mean)
    return MeasureStats(
        c=p.j_bar * ef,
        M=MatrixKernelSequence(_centred_to_fft(M), periodic=False, tail=np.outer(ef, ef)),
        v_mean=v_mean,
        v_second=MatrixKernelSequence(_centred_to_fft(v_cov + v_tail), periodic=False, tail=v_tail),
        kind="gaussian",
    )
