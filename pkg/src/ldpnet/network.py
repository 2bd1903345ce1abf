"""Weight-field sampling, network and reference-process simulation, and the map Psi.

Arrays are stored with neuron index ``j`` at row ``j + n``.  Weight matrices use
row = postsynaptic neuron, column = presynaptic neuron, so the recurrent input of
neuron ``i`` is ``(J @ f(u))[i]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PSDError
from .model import CorrelationKernel, ModelParams, wrap_lags
from .streams import stream

log = logging.getLogger(__name__)

DENSE_ORACLE_MAX = 4096


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    n: int
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class TorusSpectrum:
    """Eigenvalues of the circulant covariance of the weight field on the N x N torus."""

    n: int
    eigenvalues: np.ndarray
    mean_offset: float
    clamped: int = 0


@dataclass(frozen=True, eq=False)
class PathConfiguration:
    """Trajectories of all neurons in V_n: ``values[j + n, t] = u_t^j``."""

    n: int
    T: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2 * self.n + 1, self.T + 1):
            raise ValueError(
                f"expected shape {(2 * self.n + 1, self.T + 1)}, got {self.values.shape}"
            )

    def row(self, j: int) -> np.ndarray:
        """Path of neuron ``j`` with ``j`` taken mod V_n."""
        N = 2 * self.n + 1
        return self.values[(j + self.n) % N]


def build_torus_spectrum(K: CorrelationKernel, p: ModelParams) -> TorusSpectrum:
    N = p.N
    cov = K.torus_matrix(p.n) / N
    spec = np.fft.fft2(cov)
    if np.max(np.abs(spec.imag)) > 1e-10 * max(1.0, np.max(np.abs(spec.real))):
        raise PSDError("torus covariance is not symmetric: its spectrum has an imaginary part")
    eig = spec.real
    top = np.max(np.abs(eig))
    tol = 1e-9 * top if top > 0 else 0.0
    if eig.min() < -tol:
        raise PSDError(
            f"kernel restricted to the n={p.n} torus is not positive semidefinite "
            f"(min eigenvalue {eig.min():.3e})"
        )
    clamped = int(np.count_nonzero(eig < 0))
    if clamped:
        log.warning("clamped %d slightly negative torus eigenvalues to 0", clamped)
    eig = np.where(eig < 0, 0.0, eig)
    eig.setflags(write=False)
    return TorusSpectrum(p.n, eig, p.j_bar / N, clamped)


def sample_weight_batch(spec: TorusSpectrum, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent weight matrices drawn by the spectral method, shape (size, N, N)."""
    N = 2 * spec.n + 1
    z = rng.standard_normal((size, N, N, 2))
    coeff = np.sqrt(spec.eigenvalues) * (z[..., 0] + 1j * z[..., 1])
    # N * ifft2 = (1/N) * sum over the N^2 frequencies; the real part has the target covariance
    field = (np.fft.ifft2(coeff, axes=(-2, -1)) * N).real
    return spec.mean_offset + field


def sample_weights(spec: TorusSpectrum, seed: int, replicate: int = 0) -> WeightMatrix:
    rng = stream(seed, "weights", replicate)
    return WeightMatrix(spec.n, sample_weight_batch(spec, rng, 1)[0])


def dense_weight_covariance(K: CorrelationKernel, p: ModelParams) -> np.ndarray:
    """Explicit N^2 x N^2 covariance of vec(J), with (i, j) flattened to i * N + j."""
    N = p.N
    lags = wrap_lags(p.n)
    idx = np.arange(N)
    # lag (k - i) mod V_n for every pair of row indices
    d = lags[(idx[None, :] - idx[:, None]) % N]
    di = d[:, None, :, None]
    dj = d[None, :, None, :]
    cov = K.evaluate(di, dj) / N
    return cov.reshape(N * N, N * N)


def sample_weights_dense_oracle(
    K: CorrelationKernel, p: ModelParams, seed: int, size: int | None = None
) -> WeightMatrix | np.ndarray:
    """Same law as :func:`sample_weights`, via an eigendecomposition of the dense covariance.

    With ``size`` given, returns an array of shape (size, N, N) instead of a single matrix.
    """
    N = p.N
    if N * N > DENSE_ORACLE_MAX:
        raise ConfigError(f"dense oracle limited to N^2 <= {DENSE_ORACLE_MAX}, got N={N}")
    cov = dense_weight_covariance(K, p)
    lam, vec = np.linalg.eigh(cov)
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    rng = stream(seed, "weights", 0)
    z = rng.standard_normal((1 if size is None else size, N * N))
    draws = (p.j_bar / N + z @ root.T).reshape(-1, N, N)
    if size is None:
        return WeightMatrix(p.n, draws[0])
    return draws


def _network_recursion(p: ModelParams, J, u0, theta, noise) -> np.ndarray:
    size, N = u0.shape
    U = np.empty((size, N, p.T + 1))
    U[..., 0] = u0
    for t in range(1, p.T + 1):
        prev = U[..., t - 1]
        drive = np.einsum("bij,bj->bi", J, p.gain(prev)) if J is not None else 0.0
        U[..., t] = p.gamma * prev + drive + theta + noise[..., t - 1]
    return U


def simulate_network_batch(p: ModelParams, J: np.ndarray, seed: int, address: tuple) -> np.ndarray:
    """Coupled dynamics for a stack of weight matrices J (size, N, N); one replicate each."""
    size, N = J.shape[0], p.N
    u0 = p.init_law.sample(stream(seed, "init", *address), (size, N))
    theta = p.theta_bar + p.theta_std * stream(seed, "theta", *address).standard_normal((size, N))
    noise = p.sigma * stream(seed, "noise", *address).standard_normal((size, N, p.T))
    return _network_recursion(p, J, u0, theta, noise)


def simulate_reference_batch(p: ModelParams, seed: int, address: tuple, size: int) -> np.ndarray:
    """Uncoupled reference process Y with deterministic drive theta_bar, shape (size, N, T+1)."""
    N = p.N
    u0 = p.init_law.sample(stream(seed, "init", *address), (size, N))
    noise = p.sigma * stream(seed, "noise", *address).standard_normal((size, N, p.T))
    return _network_recursion(p, None, u0, p.theta_bar, noise)


def simulate_network(p: ModelParams, J: WeightMatrix, seed: int, replicate: int = 0) -> PathConfiguration:
    if J.n != p.n:
        raise ConfigError(f"weight matrix has n={J.n}, parameters have n={p.n}")
    U = simulate_network_batch(p, J.entries[None], seed, (replicate,))
    return PathConfiguration(p.n, p.T, U[0])


def simulate_reference(p: ModelParams, seed: int, replicate: int = 0) -> PathConfiguration:
    U = simulate_reference_batch(p, seed, (replicate,), 1)
    return PathConfiguration(p.n, p.T, U[0])


def psi_array(u: np.ndarray, gamma: float, theta_bar: float) -> np.ndarray:
    """Innovation map on the last axis (time): v_0 = u_0, v_s = u_s - gamma u_{s-1} - theta_bar."""
    v = np.array(u, dtype=float, copy=True)
    v[..., 1:] = u[..., 1:] - gamma * u[..., :-1] - theta_bar
    return v


def psi_inverse_array(v: np.ndarray, gamma: float, theta_bar: float) -> np.ndarray:
    u = np.array(v, dtype=float, copy=True)
    for s in range(1, u.shape[-1]):
        u[..., s] = v[..., s] + gamma * u[..., s - 1] + theta_bar
    return u


def psi_map(u: PathConfiguration, p: ModelParams) -> PathConfiguration:
    return PathConfiguration(u.n, u.T, psi_array(u.values, p.gamma, p.theta_bar))


def psi_inverse(v: PathConfiguration, p: ModelParams) -> PathConfiguration:
    return PathConfiguration(v.n, v.T, psi_inverse_array(v.values, p.gamma, p.theta_bar))
