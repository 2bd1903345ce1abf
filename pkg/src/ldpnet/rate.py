"""Rate-function ingredients: log-determinant and quadratic parts of Gamma, the
bound beta_2, Gaussian relative entropy, process-level entropy and H."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import (
    EmpiricalMeasure,
    MeasureStats,
    QuadratureSpec,
    lag_moments,
    stats_of_empirical,
    stats_of_gaussian,
)
from .errors import ConfigError, NumericError, PSDError
from .measures import StationaryGaussianMeasure
from .model import CorrelationKernel, ModelParams, wrap_lags
from .network import psi_array
from .spectral import (
    MatrixKernelSequence,
    SpectralGrid,
    a_coefficients,
    block_circulant_logdet,
    build_K_sequence,
    dft_sequence,
    hermitian_eig,
    limit_K_at,
    limit_spectral_density,
    logdet_terms,
    resolvent_ratio,
)

DEFAULT_SCHEDULE = (4, 8, 16, 32)


@dataclass
class GammaReport:
    gamma1_n: float
    gamma2_n: float
    gamma_n: float
    gamma1_lim: float | None = None
    gamma2_lim: float | None = None
    gamma_lim: float | None = None
    beta2: float | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class EntropyRate:
    value: float
    table: list[tuple[int, float]]
    richardson: float | None
    increment: float | None


@dataclass
class HReport:
    I3: float
    gamma1: float
    gamma2: float
    H: float
    entropy: EntropyRate


# -- finite-n pieces ---------------------------------------------------------


def gamma1_finite(Kgrid: SpectralGrid, p: ModelParams) -> float:
    N = Kgrid.size
    return -block_circulant_logdet(Kgrid, p.sigma) / (2.0 * N)


def finite_spectral_parts(stats: MeasureStats, K: CorrelationKernel, p: ModelParams):
    """Gamma_[n],1 and the coefficient sequence A_[n] from one eigen-decomposition.

    Works elementwise over leading batch dimensions of ``stats``.
    """
    Kgrid = dft_sequence(build_K_sequence(stats, K, p))
    lam, vec = hermitian_eig(Kgrid.values, "K_[n] spectral grid")
    N = Kgrid.size
    g1 = -np.log1p(lam / p.sigma**2).sum(axis=(-1, -2)) / (2.0 * N)
    ratio = lam / (p.sigma**2 + lam)
    Ahat = np.einsum("...ij,...j,...kj->...ik", vec, ratio, np.conj(vec))
    A = a_coefficients(SpectralGrid(Ahat))
    return g1, A, lam


def phi_n(stats: MeasureStats, A: MatrixKernelSequence, v: np.ndarray, p: ModelParams):
    """The integrand of Gamma_[n],2 at innovations ``v`` of shape (..., N, T)."""
    c = stats.c
    N = v.shape[-2]
    w = v - c[..., None, :]
    quad = np.einsum("...kst,...kst->...", A.blocks, lag_moments(w))
    lin = 2.0 * np.einsum("...t,...jt->...", c, v) / N
    return (quad + lin - np.einsum("...t,...t->...", c, c)) / (2.0 * p.sigma**2)


def _gaussian_phi_expectation(g, stats, A, p: ModelParams) -> float:
    """Exact expectation of phi_n when the N-neuron window of innovations has law ``g``."""
    n = p.n
    N = p.N
    v_mean, v_cov = g.innovation_moments(p)
    L = g.max_lag
    c = stats.c
    blocks = A.blocks
    quad = 0.0
    for j in range(-n, n + 1):
        for k in wrap_lags(n):
            d = ((j + k + n) % N - n) - j
            if abs(d) <= L:
                quad += np.sum(blocks[k % N] * v_cov[d + L])
    A0 = blocks.sum(axis=0)
    quad = quad / N + v_mean @ A0 @ v_mean - 2.0 * c @ A0 @ v_mean + c @ A0 @ c
    return float((quad + 2.0 * c @ v_mean - c @ c) / (2.0 * p.sigma**2))


def gamma2_finite(mu, K: CorrelationKernel, p: ModelParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    if isinstance(mu, EmpiricalMeasure):
        stats = stats_of_empirical(mu)
        _, A, _ = finite_spectral_parts(stats, K, p)
        v = psi_array(mu.config.values, p.gamma, p.theta_bar)[:, 1:]
        return float(phi_n(stats, A, v, p))
    if isinstance(mu, StationaryGaussianMeasure):
        stats = stats_of_gaussian(mu, p, quad)
        _, A, _ = finite_spectral_parts(stats, K, p)
        return _gaussian_phi_expectation(mu, stats, A, p)
    raise TypeError(f"unsupported measure type {type(mu).__name__}")


def gamma_n_values(values: np.ndarray, K: CorrelationKernel, p: ModelParams):
    """Gamma_[n] at the empirical measures of configurations ``values`` (..., N, T+1)."""
    from .empirical import stats_from_values

    stats = stats_from_values(values, p)
    g1, A, _ = finite_spectral_parts(stats, K, p)
    v = psi_array(values, p.gamma, p.theta_bar)[..., 1:]
    return g1 + phi_n(stats, A, v, p)


# -- limits ------------------------------------------------------------------


def gamma1_from_density(density: SpectralGrid, p: ModelParams) -> float:
    """Periodic trapezoid rule for ``-(1/4 pi) int log det(I + K~/sigma^2)``."""
    return float(-0.5 * np.mean(logdet_terms(density.values, p.sigma), axis=-1))


def _doubling(fn, grid: int, tol: float, max_doublings: int = 16):
    prev = fn(grid)
    for _ in range(max_doublings):
        grid *= 2
        cur = fn(grid)
        if abs(cur - prev) < tol:
            return cur, grid
        prev = cur
    raise NumericError(f"quadrature did not converge to {tol} after {max_doublings} doublings")


def gamma1_limit(
    stats: MeasureStats, K: CorrelationKernel, p: ModelParams, tol: float = 1e-8, grid: int = 64
) -> float:
    value, _ = _doubling(
        lambda G: gamma1_from_density(limit_spectral_density(stats, K, p, G), p), grid, tol
    )
    return value


def gamma2_limit(
    stats: MeasureStats, K: CorrelationKernel, p: ModelParams, tol: float = 1e-8, grid: int = 64
) -> float:
    c, vbar = stats.c, stats.v_mean
    eye = np.eye(p.T)

    def mean_terms(A0):
        return c @ (A0 - eye) @ c + 2.0 * vbar @ (eye - A0) @ c

    if stats.v_second.periodic:
        N = stats.v_second.length
        w = 2.0 * np.pi * np.arange(N) / N
        # A~ at -w_m; index 0 is theta = 0
        Aneg = resolvent_ratio(limit_K_at(stats, K, p, -w), p.sigma)
        Vhat = np.fft.fft(stats.v_second.blocks, axis=-3)
        spec = np.einsum("...mst,...mst->...", Aneg, Vhat).real / N
        A0 = Aneg[..., 0, :, :].real
        return float((spec + mean_terms(A0)) / (2.0 * p.sigma**2))

    V = stats.v_second
    Lv = V.half_width
    tail = V.tail if V.tail is not None else np.zeros((p.T, p.T))
    cov = V.blocks - tail

    def value(G):
        if G <= 2 * Lv:
            raise NumericError("grid too small for the innovation lag range")
        Agrid = resolvent_ratio(limit_spectral_density(stats, K, p, G).values, p.sigma)
        coeffs = np.fft.ifft(Agrid, axis=0).real
        idx = wrap_lags(Lv) % G
        spec = np.sum(coeffs[idx] * cov)
        A0 = Agrid[0].real
        spec += vbar @ A0 @ vbar
        return float((spec + mean_terms(A0)) / (2.0 * p.sigma**2))

    result, _ = _doubling(value, max(grid, 4 * Lv + 4), tol)
    return result


# -- bound and entropy -------------------------------------------------------


def beta2_bound(K: CorrelationKernel, p: ModelParams) -> float:
    if p.j_bar == 0.0:
        return 0.0
    if not K.lambda_sum > 0.0:
        raise ConfigError("beta_2 needs a kernel with positive total sum")
    return (
        p.T * p.j_bar**2 / (2.0 * p.sigma**2 * K.lambda_sum)
        * (p.sigma**2 + p.theta_std**2 + K.lambda_abs_sum)
    )


def beta2_bound_finite(K: CorrelationKernel, p: ModelParams) -> float:
    """The same formula with kernel sums restricted to V_n x V_n.

    Whenever the torus spectrum is positive semidefinite, ``K^_0`` dominates
    ``Lambda_sum_[n] (E f)(E f)^T``, so ``min_v phi_n >= -J_bar^2 / (2 Lambda_sum_[n])``,
    which this value never undercuts.  The unrestricted bound can.
    """
    if p.j_bar == 0.0:
        return 0.0
    lam = K.torus_matrix(p.n)
    total = float(lam.sum())
    if not total > 0.0:
        raise ConfigError("beta_2 needs a kernel with positive total sum on the torus")
    return (
        p.T * p.j_bar**2 / (2.0 * p.sigma**2 * total)
        * (p.sigma**2 + p.theta_std**2 + float(np.abs(lam).sum()))
    )


def kl_gaussian(mean, cov, ref_mean, ref_cov) -> float:
    """Relative entropy of N(mean, cov) with respect to N(ref_mean, ref_cov).

    Returns ``inf`` when ``cov`` is singular; raises when the reference is.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    ref_mean = np.atleast_1d(np.asarray(ref_mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    ref_cov = np.atleast_2d(np.asarray(ref_cov, dtype=float))
    d = len(mean)
    try:
        chol = np.linalg.cholesky(ref_cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError("reference covariance is not positive definite") from exc
    lam = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if lam.min() < -1e-12 * max(1.0, lam.max()):
        raise PSDError("covariance is not positive semidefinite")
    if lam.min() <= 1e-14 * max(1.0, lam.max()):
        return math.inf
    trace = np.trace(np.linalg.solve(ref_cov, cov))
    dm = np.linalg.solve(chol, mean - ref_mean)
    logdet_ref = 2.0 * np.sum(np.log(np.diag(chol)))
    value = 0.5 * (trace - d + dm @ dm + logdet_ref - np.sum(np.log(lam)))
    return float(value)


def _entropy_term(g: StationaryGaussianMeasure, ref: StationaryGaussianMeasure, n: int) -> float:
    """(1/N) KL between the circulant-wrapped N-neuron window of g and the product reference."""
    d = len(g.mean)
    Cw = g.periodized(n)
    spec = np.fft.fft(Cw, axis=0)
    spec = 0.5 * (spec + np.conj(np.swapaxes(spec, 1, 2)))
    lam = np.linalg.eigvalsh(spec)
    top = max(1.0, np.abs(lam).max())
    if lam.min() < -1e-10 * top:
        raise PSDError(f"wrapped window covariance at n={n} is not positive semidefinite")
    if lam.min() <= 1e-14 * top:
        return math.inf
    S = ref.autocov[0]
    chol = np.linalg.cholesky(S)
    dm = np.linalg.solve(chol, g.mean - ref.mean)
    trace = np.trace(np.linalg.solve(S, Cw[0]))
    logdet_ref = 2.0 * np.sum(np.log(np.diag(chol)))
    mean_logdet = np.sum(np.log(lam)) / (2 * n + 1)
    return float(0.5 * (trace - d + dm @ dm + logdet_ref - mean_logdet))


def entropy_rate_gaussian(
    g: StationaryGaussianMeasure, p: ModelParams, schedule=DEFAULT_SCHEDULE
) -> EntropyRate:
    if p.init_law.kind != "gaussian" or not p.init_law.std > 0.0:
        raise ConfigError("process-level entropy needs a nondegenerate Gaussian initial law")
    ref = StationaryGaussianMeasure.reference(p)
    table = [(int(n), _entropy_term(g, ref, int(n))) for n in schedule]
    richardson = increment = None
    if len(table) >= 2:
        (n1, a1), (n2, a2) = table[-2], table[-1]
        N1, N2 = 2 * n1 + 1, 2 * n2 + 1
        increment = abs(a2 - a1)
        richardson = (N2 * a2 - N1 * a1) / (N2 - N1)
    return EntropyRate(table[-1][1], table, richardson, increment)


def rate_function_H(
    g: StationaryGaussianMeasure,
    K: CorrelationKernel,
    p: ModelParams,
    schedule=DEFAULT_SCHEDULE,
    quad: QuadratureSpec = QuadratureSpec(),
    tol: float = 1e-8,
) -> HReport:
    """``H = I3 - Gamma_1 - Gamma_2``.  An empirical measure is singular with respect to
    the reference law, so its entropy and H are infinite."""
    if isinstance(g, EmpiricalMeasure):
        stats = stats_of_empirical(g)
        g1 = gamma1_limit(stats, K, p, tol)
        g2 = gamma2_limit(stats, K, p, tol)
        return HReport(math.inf, g1, g2, math.inf, EntropyRate(math.inf, [], None, None))
    ent = entropy_rate_gaussian(g, p, schedule)
    stats = stats_of_gaussian(g, p, quad)
    g1 = gamma1_limit(stats, K, p, tol)
    g2 = gamma2_limit(stats, K, p, tol)
    return HReport(ent.value, g1, g2, ent.value - g1 - g2, ent)


def evaluate_gamma(
    mu, K: CorrelationKernel, p: ModelParams, quad: QuadratureSpec = QuadratureSpec(), tol: float = 1e-8
) -> GammaReport:
    """Finite-n and limit values of Gamma for an empirical or stationary Gaussian measure."""
    if isinstance(mu, EmpiricalMeasure):
        stats = stats_of_empirical(mu)
        g1, A, lam = finite_spectral_parts(stats, K, p)
        v = psi_array(mu.config.values, p.gamma, p.theta_bar)[:, 1:]
        g2 = float(phi_n(stats, A, v, p))
    else:
        stats = stats_of_gaussian(mu, p, quad)
        g1, A, lam = finite_spectral_parts(stats, K, p)
        g2 = _gaussian_phi_expectation(mu, stats, A, p)
    g1 = float(g1)
    g1_lim = gamma1_limit(stats, K, p, tol)
    g2_lim = gamma2_limit(stats, K, p, tol)
    try:
        beta2, beta2_n = beta2_bound(K, p), beta2_bound_finite(K, p)
    except ConfigError:
        beta2 = beta2_n = None
    return GammaReport(
        gamma1_n=g1,
        gamma2_n=g2,
        gamma_n=g1 + g2,
        gamma1_lim=g1_lim,
        gamma2_lim=g2_lim,
        gamma_lim=g1_lim + g2_lim,
        beta2=beta2,
        diagnostics={
            "measure": stats.kind,
            "n": p.n,
            "T": p.T,
            "min_K_eigenvalue": float(lam.min()),
            "max_A_eigenvalue": float((lam / (p.sigma**2 + lam)).max()),
            "beta2_restricted": beta2_n,
        },
    )
