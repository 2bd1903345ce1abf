import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpnet import CorrelationKernel, ModelParams, NumericError, PSDError
from ldpnet.empirical import EmpiricalMeasure, stats_of_empirical
from ldpnet.network import PathConfiguration
from ldpnet.spectral import (
    MatrixKernelSequence,
    SpectralGrid,
    a_coefficients,
    assemble_block_circulant,
    block_circulant_logdet,
    build_A_grid,
    build_K_sequence,
    dft_sequence,
    full_K_lags,
    limit_spectral_density,
)

from conftest import random_config, random_cov_sequence


def empirical_stats(rng, p):
    u = PathConfiguration(p.n, p.T, random_config(rng, p.n, p.T))
    return stats_of_empirical(EmpiricalMeasure(u, p))


def test_dirac_K_sequence(rng):
    p = ModelParams(n=2, T=2, theta_std=0.6)
    stats = empirical_stats(rng, p)
    K = build_K_sequence(stats, CorrelationKernel.dirac(1.44), p)
    assert np.allclose(K.block(0), 0.36 + 1.44 * stats.M.block(0), atol=1e-15)
    for k in (1, 2, -1, -2):
        assert np.all(K.block(k) == 0.0)


def test_zero_kernel_K_sequence(rng):
    p = ModelParams(n=1, T=2)
    K = build_K_sequence(empirical_stats(rng, p), CorrelationKernel.from_table([[0.0]]), p)
    assert np.all(K.blocks == 0.0)


def test_separable_K_hand_sum():
    p = ModelParams(n=1, T=1)
    # f(0) = 0.5 for the logistic gain
    stats = stats_of_empirical(EmpiricalMeasure(PathConfiguration(1, 1, np.zeros((3, 2))), p))
    K = build_K_sequence(stats, CorrelationKernel.separable_geometric(1.0, 0.5, 0.5), p)
    assert K.block(1)[0, 0] == pytest.approx(0.25, abs=1e-15)


def test_dft_examples():
    blocks = np.zeros((5, 2, 2))
    blocks[0] = [[1.0, 0.2], [0.2, 3.0]]
    grid = dft_sequence(MatrixKernelSequence(blocks))
    assert np.allclose(grid.values, blocks[0], atol=1e-15)
    scalar = MatrixKernelSequence(np.array([1.0, 0.5, 0.5]).reshape(3, 1, 1))
    assert dft_sequence(scalar).values[0, 0, 0] == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(1, 3), st.integers(0, 2**32))
def test_dft_hermitian_and_round_trip(n, T, seed):
    seq = MatrixKernelSequence(random_cov_sequence(np.random.default_rng(seed), n, T))
    grid = dft_sequence(seq).values
    N = 2 * n + 1
    assert np.allclose(grid, np.conj(np.swapaxes(grid, 1, 2)), atol=1e-12)
    for m in range(N):
        assert np.allclose(grid[(-m) % N], np.conj(grid[m]), atol=1e-12)
    back = np.fft.ifft(grid, axis=0)
    assert np.allclose(back, seq.blocks, atol=1e-12)


def test_A_grid_examples():
    sigma = 1.3
    zero = SpectralGrid(np.zeros((3, 2, 2), dtype=complex))
    assert np.allclose(build_A_grid(zero, sigma).values, 0.0)
    scalar = SpectralGrid(np.full((1, 1, 1), sigma**2, dtype=complex))
    assert build_A_grid(scalar, sigma).values[0, 0, 0] == pytest.approx(0.5)
    diag = SpectralGrid(np.diag([sigma**2, 3 * sigma**2])[None].astype(complex))
    assert np.allclose(build_A_grid(diag, sigma).values[0], np.diag([0.5, 0.75]), atol=1e-14)


def test_A_grid_rejects_non_psd():
    with pytest.raises(PSDError):
        build_A_grid(SpectralGrid(-np.eye(2)[None].astype(complex)), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(1, 3), st.floats(0.3, 3.0), st.integers(0, 2**32))
def test_A_eigenvalue_band(n, T, sigma, seed):
    K = dft_sequence(MatrixKernelSequence(random_cov_sequence(np.random.default_rng(seed), n, T)))
    A = build_A_grid(K, sigma).values
    lam_A = np.linalg.eigvalsh(A)
    lam_max = np.linalg.eigvalsh(K.values).max()
    assert lam_A.min() >= -1e-12
    assert lam_A.max() <= 1 - sigma**2 / (sigma**2 + lam_max) + 1e-12


def test_a_coefficients_examples(rng):
    const = np.array([[0.4, 0.1], [0.1, 0.2]])
    A = a_coefficients(SpectralGrid(np.broadcast_to(const, (5, 2, 2)).astype(complex)))
    assert np.allclose(A.block(0), const, atol=1e-15)
    assert np.allclose(A.blocks[1:], 0.0, atol=1e-15)
    seq = MatrixKernelSequence(random_cov_sequence(rng, 2, 2))
    G = build_A_grid(dft_sequence(seq), 1.0)
    coeffs = a_coefficients(G)
    assert np.allclose(dft_sequence(coeffs).values, G.values, atol=1e-12)
    assert np.allclose(coeffs.block(-1), coeffs.block(1).T, atol=1e-12)


def test_a_coefficients_imaginary_guard():
    vals = np.zeros((3, 1, 1), dtype=complex)
    vals[1] = 1.0
    with pytest.raises(NumericError):
        a_coefficients(SpectralGrid(vals))


def test_dirac_A_is_local(rng):
    p = ModelParams(n=2, T=2, theta_std=0.3)
    K = build_K_sequence(empirical_stats(rng, p), CorrelationKernel.dirac(2.0), p)
    A = a_coefficients(build_A_grid(dft_sequence(K), p.sigma))
    assert np.allclose(A.blocks[1:], 0.0, atol=1e-14)


def test_logdet_examples():
    assert block_circulant_logdet(SpectralGrid(np.zeros((3, 2, 2), dtype=complex)), 1.0) == 0.0
    one = SpectralGrid(np.full((1, 1, 1), 4.0, dtype=complex))
    assert block_circulant_logdet(one, 2.0) == pytest.approx(np.log(2.0), abs=1e-15)


@pytest.mark.parametrize("n,T", [(0, 1), (1, 2), (2, 3)])
def test_logdet_matches_dense(rng, n, T):
    sigma = 0.8
    seq = MatrixKernelSequence(random_cov_sequence(rng, n, T))
    dense = assemble_block_circulant(seq)
    _, ref = np.linalg.slogdet(np.eye(dense.shape[0]) + dense / sigma**2)
    assert block_circulant_logdet(dft_sequence(seq), sigma) == pytest.approx(ref, abs=1e-10)


def test_dirac_limit_density_is_constant(rng):
    p = ModelParams(n=2, T=2, theta_std=0.4)
    stats = empirical_stats(rng, p)
    dens = limit_spectral_density(stats, CorrelationKernel.dirac(0.7), p, 16).values
    expected = 0.16 + 0.7 * stats.M.block(0)
    assert np.allclose(dens, expected, atol=1e-14)


def test_zero_limit_density(rng):
    p = ModelParams(n=1, T=2)
    dens = limit_spectral_density(empirical_stats(rng, p), CorrelationKernel.from_table([[0.0]]), p, 8)
    assert np.all(np.abs(dens.values) == 0.0)


def test_limit_density_at_zero_matches_lag_sum(rng):
    p = ModelParams(n=2, T=1)
    K = CorrelationKernel.separable_geometric(1.0, 0.5, 0.5)
    stats = empirical_stats(rng, p)
    dens = limit_spectral_density(stats, K, p, 8).values[0, 0, 0].real
    # direct lag-domain sum over |k|, |l| <= 64 with M periodic in l
    ks = np.arange(-64, 65)
    lam = K.evaluate(ks[:, None], ks[None, :])
    Ml = np.array([stats.M.block(int(l))[0, 0] for l in ks])
    direct = np.sum(lam * Ml[None, :])
    assert dens == pytest.approx(direct, abs=1e-8)


def test_full_lags_dirac_equals_restricted(rng):
    p = ModelParams(n=2, T=2, theta_std=0.2)
    stats = empirical_stats(rng, p)
    K = CorrelationKernel.dirac(0.5)
    full = full_K_lags(stats, K, p)
    restricted = build_K_sequence(stats, K, p)
    assert np.allclose(full.block(0), restricted.block(0), atol=1e-15)


def test_T_guard(rng):
    p = ModelParams(n=0, T=17)
    stats = empirical_stats(rng, p)
    with pytest.raises(ValueError):
        build_K_sequence(stats, CorrelationKernel.dirac(1.0), p)
