import math

import numpy as np
import pytest
from scipy import stats

from randpoly.rng import RngStream, replication_generators, stream_key, uniform_directions
from randpoly.sphere import ball_volume, circle_rule, icosphere_rule, integrate_sphere, omega, qmc_sphere, tangent_bases


def test_stream_key_packing():
    a = stream_key(1, 2, 3, 4)
    assert a.dtype == np.uint64 and a[0] == 1
    assert len({tuple(stream_key(1, t, n, r)) for t in range(3) for n in range(3) for r in range(3)}) == 27
    with pytest.raises(ValueError):
        stream_key(0, 2 ** 16)
    with pytest.raises(ValueError):
        stream_key(0, 0, 0, 2 ** 24)


def test_rekeyed_generators_match_fresh_streams():
    got = [g.random(5).copy() for _, g in replication_generators(7, 1, 20, range(3, 8))]
    want = [RngStream(7, 1, 20, r).generator().random(5) for r in range(3, 8)]
    assert all(np.array_equal(a, b) for a, b in zip(got, want))


def test_streams_are_distinct():
    a = RngStream(7, 0, 20, 0).generator().random(100)
    b = RngStream(7, 0, 20, 1).generator().random(100)
    c = RngStream(8, 0, 20, 0).generator().random(100)
    assert not np.allclose(a, b) and not np.allclose(a, c)


def test_uniform_directions():
    rng = np.random.default_rng(0)
    u = uniform_directions(rng, 50_000, 3)
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0)
    # Archimedes: each coordinate is uniform on [-1, 1] in three dimensions
    assert stats.kstest((u[:, 2] + 1) / 2, "uniform").pvalue > 0.001


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_omega_and_ball_volume(d):
    assert omega(d) == pytest.approx(d * ball_volume(d), rel=1e-15)
    if d == 3:
        assert omega(3) == pytest.approx(4 * math.pi)


def test_rules_sum_to_sphere_area():
    _, w = circle_rule(64)
    assert w.sum() == pytest.approx(2 * math.pi, rel=1e-15)
    nodes, area = icosphere_rule(3)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0)
    assert area.sum() == pytest.approx(4 * math.pi, rel=1e-3)


@pytest.mark.parametrize("d", [2, 3])
def test_integrate_polynomials(d):
    # int_S u_1^2 = omega_d / d and int_S u_1^4 = 3 omega_d / (d (d + 2))
    assert integrate_sphere(lambda u: u[:, 0] ** 2, d).value == pytest.approx(omega(d) / d, rel=1e-9)
    assert integrate_sphere(lambda u: u[:, 0] ** 4, d).value == pytest.approx(
        3 * omega(d) / (d * (d + 2)), rel=1e-8)


def test_qmc_higher_dimension():
    res = integrate_sphere(lambda u: u[:, 0] ** 2, 4)
    assert abs(res.value - omega(4) / 4) < 5 * res.error + 1e-4
    res = qmc_sphere(lambda u: np.ones(len(u)), 5)
    assert res.value == pytest.approx(omega(5), rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_tangent_bases_orthonormal(d):
    u = uniform_directions(np.random.default_rng(d), 100, d)
    B = tangent_bases(u)
    assert B.shape == (100, d - 1, d)
    assert np.allclose(np.einsum("mij,mkj->mik", B, B), np.eye(d - 1)[None], atol=1e-12)
    assert np.allclose(np.einsum("mij,mj->mi", B, u), 0.0, atol=1e-12)
