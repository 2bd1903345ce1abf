"""Stationary Gaussian measures on path space: the analytic test family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PSDError
from .model import ModelParams
from .network import psi_array


def innovation_matrices(T: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrices D, L with ``Psi(u) = D u - theta_bar e`` and ``u = L (v + theta_bar e)``.

    ``e`` is zero at time 0 and one elsewhere.
    """
    D = np.eye(T + 1)
    for s in range(1, T + 1):
        D[s, s - 1] = -gamma
    return D, np.linalg.inv(D)


@dataclass(frozen=True, eq=False)
class StationaryGaussianMeasure:
    """Spatially stationary Gaussian law of ``(u^j)_{j in Z}``, each ``u^j`` in R^(T+1).

    ``autocov[k + L] = C^k = cov(u^0, u^k)`` for ``|k| <= L``; zero beyond.
    """

    mean: np.ndarray
    autocov: np.ndarray

    def __post_init__(self):
        C = self.autocov
        if C.ndim != 3 or C.shape[0] % 2 == 0 or C.shape[1:] != (len(self.mean),) * 2:
            raise ValueError("autocov must have shape (2L+1, T+1, T+1)")
        if not np.allclose(C[::-1], np.swapaxes(C, 1, 2), atol=1e-12, rtol=0):
            raise ValueError("autocov must satisfy C^{-k} = transpose(C^k)")

    @property
    def max_lag(self) -> int:
        return self.autocov.shape[0] // 2

    @property
    def T(self) -> int:
        return len(self.mean) - 1

    def cov(self, k: int) -> np.ndarray:
        L = self.max_lag
        if abs(k) > L:
            return np.zeros_like(self.autocov[0])
        return self.autocov[k + L]

    @classmethod
    def from_taps(cls, mean, taps) -> "StationaryGaussianMeasure":
        """Moving average ``u^j = mean + sum_q H_q xi^{j-q}`` with white standard ``xi``.

        ``taps`` maps a neuron offset q >= 0 to a (T+1) x (T+1) matrix ``H_q``.
        """
        mean = np.asarray(mean, dtype=float)
        d = len(mean)
        Q = max(taps)
        H = np.zeros((Q + 1, d, d))
        for q, h in taps.items():
            H[q] = h
        C = np.zeros((2 * Q + 1, d, d))
        for k in range(-Q, Q + 1):
            for q in range(Q + 1):
                if 0 <= q + k <= Q:
                    C[k + Q] += H[q] @ H[q + k].T
        return cls(mean, C)

    @classmethod
    def reference(cls, p: ModelParams) -> "StationaryGaussianMeasure":
        """Law of the uncoupled reference process Y (requires a Gaussian initial law)."""
        law = p.init_law
        D, L = innovation_matrices(p.T, p.gamma)
        e = np.ones(p.T + 1)
        e[0] = 0.0
        v_mean = np.concatenate([[law.mu], np.zeros(p.T)])
        v_cov = np.diag(np.concatenate([[law.variance], np.full(p.T, p.sigma**2)]))
        mean = L @ (v_mean + p.theta_bar * e)
        return cls(mean, (L @ v_cov @ L.T)[None])

    @classmethod
    def from_innovations(
        cls,
        p: ModelParams,
        init_mean: float = 0.0,
        init_std: float = 1.0,
        drift=0.0,
        noise_std: float = 1.0,
        time_corr: float = 0.0,
        neuron_taps=(1.0,),
    ) -> "StationaryGaussianMeasure":
        """Gaussian measure specified through its innovations ``v = Psi(u)``.

        ``v_0^j ~ N(init_mean, init_std^2)`` independently over neurons; for s >= 1,
        ``v_s^j = drift_s + sum_q neuron_taps[q] * xi_s^{j-q}`` where each ``xi^j`` is
        a centred Gaussian vector with covariance ``noise_std^2 time_corr^|s-t|``.
        """
        T = p.T
        D, L = innovation_matrices(T, p.gamma)
        e = np.ones(T + 1)
        e[0] = 0.0
        drift = np.broadcast_to(np.asarray(drift, dtype=float), (T,))
        v_mean = np.concatenate([[init_mean], drift])
        idx = np.arange(T)
        S = noise_std**2 * float(time_corr) ** np.abs(idx[:, None] - idx[None, :])
        taps = np.asarray(neuron_taps, dtype=float)
        Q = len(taps) - 1
        C = np.zeros((2 * Q + 1, T + 1, T + 1))
        for k in range(-Q, Q + 1):
            w = sum(taps[q] * taps[q + k] for q in range(Q + 1) if 0 <= q + k <= Q)
            C[k + Q, 1:, 1:] = w * S
        C[Q, 0, 0] = init_std**2
        mean = L @ (v_mean + p.theta_bar * e)
        return cls(mean, np.einsum("ij,kjl,ml->kim", L, C, L))

    def innovation_moments(self, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
        """Mean and lag covariances of ``Psi(u)`` restricted to times 1..T."""
        D, _ = innovation_matrices(self.T, p.gamma)
        v_mean = psi_array(self.mean, p.gamma, p.theta_bar)[1:]
        v_cov = np.einsum("ij,kjl,ml->kim", D, self.autocov, D)[:, 1:, 1:]
        return v_mean, v_cov

    def periodized(self, n: int) -> np.ndarray:
        """Autocovariance folded onto the N-torus, FFT order: ``sum_q C^{k + qN}``."""
        N = 2 * n + 1
        L = self.max_lag
        out = np.zeros((N,) + self.autocov.shape[1:])
        for k in range(-L, L + 1):
            out[k % N] += self.autocov[k + L]
        return out

    def window_covariance(self, N: int) -> np.ndarray:
        """Dense covariance of ``(u^0, ..., u^{N-1})`` (no wrapping)."""
        d = len(self.mean)
        out = np.zeros((N * d, N * d))
        for i in range(N):
            for j in range(N):
                out[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.cov(j - i)
        return out

    def sample_window(self, N: int, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exact draws of N consecutive neurons, shape (size, N, T+1)."""
        d = len(self.mean)
        lam, vec = np.linalg.eigh(self.window_covariance(N))
        if lam.min() < -1e-10 * max(1.0, lam.max()):
            raise PSDError("window covariance is not positive semidefinite")
        root = vec * np.sqrt(np.clip(lam, 0.0, None))
        z = rng.standard_normal((size, N * d))
        return (z @ root.T).reshape(size, N, d) + self.mean

    def sample_torus(self, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws of the circulant-wrapped law on V_n (spectral method), shape (size, N, T+1)."""
        N = 2 * n + 1
        d = len(self.mean)
        spec = np.fft.fft(self.periodized(n), axis=0)
        spec = 0.5 * (spec + np.conj(np.swapaxes(spec, 1, 2)))
        lam, vec = np.linalg.eigh(spec)
        if lam.min() < -1e-10 * max(1.0, np.abs(lam).max()):
            raise PSDError("wrapped autocovariance is not positive semidefinite")
        root = vec * np.sqrt(np.clip(lam, 0.0, None))[:, None, :]
        z = rng.standard_normal((size, N, d, 2))
        zc = (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
        coeff = np.einsum("mij,bmj->bmi", root, zc)
        # complex field with E[x x^H] = circulant covariance; real part halves it
        field = np.fft.fft(coeff, axis=1) / np.sqrt(N)
        return np.sqrt(2.0) * field.real + self.mean
