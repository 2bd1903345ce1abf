"""Block-circulant spectral calculus for T x T matrix sequences indexed by lag.

Sequences are stored in FFT (wrap-around) order: array index ``k mod len``.  A
periodic sequence of length N = 2n + 1 represents the lags in V_n; a non-periodic
one of length 2L + 1 holds lags ``|k| <= L`` and a constant ``tail`` beyond.
The block-circulant matrix built from a sequence has block ``(i, i + k)`` equal
to ``block(k)``, and ``dft(seq)[m] = sum_k block(k) exp(-i k w_m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, PSDError
from .model import CorrelationKernel, ModelParams, wrap_lags

MAX_T = 16
MAX_LAG = 512


@dataclass(frozen=True, eq=False)
class MatrixKernelSequence:
    blocks: np.ndarray
    periodic: bool = True
    tail: np.ndarray | None = field(default=None, repr=False)

    @property
    def length(self) -> int:
        return self.blocks.shape[-3]

    @property
    def half_width(self) -> int:
        return self.length // 2

    @property
    def T(self) -> int:
        return self.blocks.shape[-1]

    @property
    def lags(self) -> np.ndarray:
        return wrap_lags(self.half_width)

    def block(self, k: int) -> np.ndarray:
        L = self.half_width
        if self.periodic:
            return self.blocks[..., k % self.length, :, :]
        if abs(k) > L:
            return self.tail if self.tail is not None else np.zeros_like(self.blocks[..., 0, :, :])
        return self.blocks[..., k % self.length, :, :]

    def restrict(self, n: int) -> "MatrixKernelSequence":
        """Periodic sequence on V_n holding ``block(k)`` for ``|k| <= n``."""
        if self.periodic:
            if self.half_width != n:
                raise ValueError("periodic sequences cannot be re-windowed")
            return self
        return MatrixKernelSequence(np.stack([self.block(int(k)) for k in wrap_lags(n)], axis=-3))


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """T x T Hermitian values on a uniform frequency grid ``2 pi m / G``, m = 0..G-1."""

    values: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[-3]

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size


def _check_T(T: int):
    if T > MAX_T:
        raise ValueError(f"T={T} exceeds the desk-scale limit {MAX_T}")


def lag_transform(blocks: np.ndarray, thetas) -> np.ndarray:
    """``sum_k blocks[k] exp(-i k theta)`` at arbitrary frequencies (FFT-order blocks)."""
    lags = wrap_lags(blocks.shape[-3] // 2)
    phase = np.exp(-1j * np.multiply.outer(np.asarray(thetas, dtype=float), lags))
    return np.einsum("gk,...kst->...gst", phase, blocks)


def hermitian_eig(values: np.ndarray, what: str = "spectral grid") -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of PSD Hermitian blocks, with tolerance -1e-10 * trace / T."""
    herm = 0.5 * (values + np.conj(np.swapaxes(values, -1, -2)))
    lam, vec = np.linalg.eigh(herm)
    T = values.shape[-1]
    scale = np.abs(np.trace(herm, axis1=-2, axis2=-1).real) / T
    tol = 1e-10 * np.maximum(scale, 1e-300)
    worst = lam.min(axis=-1)
    if np.any(worst < -tol):
        raise PSDError(f"{what} is not positive semidefinite (min eigenvalue {worst.min():.3e})")
    return np.clip(lam, 0.0, None), vec


def logdet_terms(values: np.ndarray, sigma: float) -> np.ndarray:
    """``log det(I + values / sigma^2)`` per frequency."""
    lam, _ = hermitian_eig(values)
    return np.log1p(lam / sigma**2).sum(axis=-1)


def resolvent_ratio(values: np.ndarray, sigma: float) -> np.ndarray:
    """``values @ inv(sigma^2 I + values)`` per frequency, computed spectrally."""
    lam, vec = hermitian_eig(values)
    ratio = lam / (sigma**2 + lam)
    return np.einsum("...ij,...j,...kj->...ik", vec, ratio, np.conj(vec))


def build_K_sequence(stats, K: CorrelationKernel, p: ModelParams) -> MatrixKernelSequence:
    """``K^k = theta^2 [k=0] ones + sum_{l in V_n} Lambda(k, l) M^l`` for k in V_n."""
    _check_T(p.T)
    M = stats.M.restrict(p.n).blocks
    Lam = K.torus_matrix(p.n)
    blocks = np.einsum("ab,...bst->...ast", Lam, M)
    blocks[..., 0, :, :] += p.theta_std**2
    return MatrixKernelSequence(blocks)


def dft_sequence(seq: MatrixKernelSequence) -> SpectralGrid:
    return SpectralGrid(np.fft.fft(seq.blocks, axis=-3))


def build_A_grid(Kgrid: SpectralGrid, sigma: float) -> SpectralGrid:
    return SpectralGrid(resolvent_ratio(Kgrid.values, sigma))


def a_coefficients(Agrid: SpectralGrid) -> MatrixKernelSequence:
    coeffs = np.fft.ifft(Agrid.values, axis=-3)
    resid = np.max(np.abs(coeffs.imag)) if coeffs.size else 0.0
    if resid > 1e-9:
        raise NumericError(f"inverse transform has imaginary residual {resid:.3e}")
    return MatrixKernelSequence(np.ascontiguousarray(coeffs.real))


def block_circulant_logdet(Kgrid: SpectralGrid, sigma: float) -> float:
    total = float(np.sum(logdet_terms(Kgrid.values, sigma)))
    if not np.isfinite(total):
        raise PSDError("non-finite block-circulant log-determinant")
    return total


def assemble_block_circulant(seq: MatrixKernelSequence) -> np.ndarray:
    """Dense NT x NT matrix with block (i, j) = ``block(j - i)``."""
    N, T = seq.length, seq.T
    out = np.empty((N * T, N * T))
    for i in range(N):
        for j in range(N):
            out[i * T:(i + 1) * T, j * T:(j + 1) * T] = seq.blocks[(j - i) % N]
    return out


def full_K_lags(stats, K: CorrelationKernel, p: ModelParams, tol: float = 1e-12) -> MatrixKernelSequence:
    """Unrestricted lag sequence ``K^k = theta^2 [k=0] ones + sum_{l in Z} Lambda(k, l) M^l``.

    For a non-periodic ``M`` with tail ``M_inf`` the infinite l-sum is split as
    ``row_sum(k) * M_inf + sum_{|l|<=L} Lambda(k, l) (M^l - M_inf)``.  For a periodic
    (empirical) ``M`` the l-sum is folded onto the period and truncated at the
    kernel's tail radius.
    """
    rk, rl = K.extent(tol)
    if rk > MAX_LAG or rl > MAX_LAG:
        raise NumericError("kernel lag extent exceeds the truncation cap")
    ks = wrap_lags(rk)
    M = stats.M
    if M.periodic:
        N = M.length
        ls = np.arange(-rl, rl + 1)
        lam = K.evaluate(ks[:, None], ls[None, :])
        folded = np.zeros((len(ks), N))
        np.add.at(folded, (slice(None), ls % N), lam)
        blocks = np.einsum("kb,...bst->...kst", folded, M.blocks)
    else:
        L = M.half_width
        ls = wrap_lags(L)
        lam = K.evaluate(ks[:, None], ls[None, :])
        tail = M.tail if M.tail is not None else np.zeros(M.blocks.shape[-2:])
        centred = M.blocks - tail[..., None, :, :]
        blocks = np.einsum("kl,...lst->...kst", lam, centred)
        blocks = blocks + np.multiply.outer(K.row_sum(ks), tail)
    blocks[..., 0, :, :] += p.theta_std**2
    return MatrixKernelSequence(blocks, periodic=False)


def limit_K_at(stats, K: CorrelationKernel, p: ModelParams, thetas) -> np.ndarray:
    """Limit spectral density ``K~(theta)`` of the full-sum covariance at given frequencies.

    Empirical (periodic) measures use the exact atomic form
    ``theta_std^2 ones + (1/N) sum_m Lambda~(theta, -w_m) M^_m``.
    """
    _check_T(p.T)
    thetas = np.asarray(thetas, dtype=float)
    M = stats.M
    if M.periodic:
        N = M.length
        Mhat = np.fft.fft(M.blocks, axis=-3)
        w = 2.0 * np.pi * np.arange(N) / N
        lam = K.fourier(thetas[:, None], -w[None, :])
        return np.einsum("gm,...mst->...gst", lam, Mhat) / N + p.theta_std**2
    return lag_transform(full_K_lags(stats, K, p).blocks, thetas)


def limit_spectral_density(stats, K: CorrelationKernel, p: ModelParams, grid_size: int) -> SpectralGrid:
    thetas = 2.0 * np.pi * np.arange(grid_size) / grid_size
    return SpectralGrid(limit_K_at(stats, K, p, thetas))
