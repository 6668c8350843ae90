import math

import numpy as np

from injlab.rng import complex_normals, normals, rng_stream, uniforms


def test_same_key_same_stream():
    a = normals(0, "x", 1, 2, size=10**6)
    b = normals(0, "x", 1, 2, size=10**6)
    assert np.array_equal(a, b)


def test_distinct_keys_differ():
    base = uniforms(0, "x", 1, size=1000)
    assert not np.array_equal(base, uniforms(0, "x", 2, size=1000))
    assert not np.array_equal(base, uniforms(0, "y", 1, size=1000))
    assert not np.array_equal(base, uniforms(1, "x", 1, size=1000))


def test_uniforms_open_interval():
    u = uniforms(3, "u", size=10**6)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normal_moments():
    z = normals(7, "moments", size=10**6)
    n = len(z)
    assert abs(np.mean(z)) <= 4.0 / math.sqrt(n)
    assert abs(np.var(z) - 1.0) <= 4.0 * math.sqrt(2.0 / n)


def test_cross_stream_correlation():
    n = 10**5
    a = normals(0, "trial", 0, size=n)
    b = normals(0, "trial", 1, size=n)
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) <= 4.0 / math.sqrt(n)


def test_complex_normals_variance():
    z = complex_normals(5, "c", size=10**5)
    assert abs(np.var(z.real) - 0.5) <= 4.0 * math.sqrt(2.0 / len(z)) * 0.5
    assert abs(np.var(z.imag) - 0.5) <= 4.0 * math.sqrt(2.0 / len(z)) * 0.5
    assert abs(np.mean(z.real * z.imag)) <= 4.0 * 0.5 / math.sqrt(len(z))


def test_generator_reproducible_prefix():
    g1 = rng_stream(11, "prefix")
    g2 = rng_stream(11, "prefix")
    assert np.array_equal(g1.integers(0, 2**53, size=100, dtype=np.uint64),
                          g2.integers(0, 2**53, size=100, dtype=np.uint64))
