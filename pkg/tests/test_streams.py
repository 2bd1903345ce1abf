import numpy as np

from ldpnet.streams import CHUNK, chunk_sizes, map_chunks, stream


def test_streams_are_addressed():
    a = stream(5, "noise", 1, 2).standard_normal(4)
    assert np.array_equal(a, stream(5, "noise", 1, 2).standard_normal(4))
    assert not np.array_equal(a, stream(5, "noise", 2, 1).standard_normal(4))
    assert not np.array_equal(a, stream(5, "theta", 1, 2).standard_normal(4))
    assert not np.array_equal(a, stream(6, "noise", 1, 2).standard_normal(4))


def test_chunking():
    assert chunk_sizes(2 * CHUNK + 3) == [CHUNK, CHUNK, 3]
    assert chunk_sizes(CHUNK) == [CHUNK]
    assert chunk_sizes(0) == []


def test_map_chunks_order_independent_of_threads():
    fn = lambda i, size: stream(1, "gaussian", i).standard_normal(size)
    one = np.concatenate(map_chunks(fn, 5000, 1))
    many = np.concatenate(map_chunks(fn, 5000, 4))
    assert one.shape == (5000,)
    assert np.array_equal(one, many)
