from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from oracle import den_ref, enand_ref, pushforward_ref
from qreliable import dynamics as dyn
from qreliable.coeffs import coeffs
from qreliable.errors import ArgumentError, UnsupportedError
from qreliable.simplex import Dist, decode, p01_to_xy, symmetric_encode, xy_to_p01
from qreliable.thresholds import m_eps

F = Fraction


def _random_simplex(n, seed):
    return np.random.default_rng(seed).dirichlet(np.ones(3), size=n)


def test_den_map_examples():
    assert dyn.den_map(F(1, 3), F(1, 3), F(1, 9)) == (F(1, 3), F(1, 3))
    assert dyn.den_map(1, 0, 0) == (1, 0)
    assert dyn.den_map(F(1, 2), F(1, 2), 0) == (F(1, 4), F(1, 4))


def test_den_map_matches_table_pushforward_exact():
    rng = np.random.default_rng(1)
    for _ in range(200):
        w = [int(x) + 1 for x in rng.integers(0, 30, size=3)]
        d = Dist.of([F(x, sum(w)) for x in w])
        eps = F(int(rng.integers(0, 50)), 100)
        want = pushforward_ref(den_ref, 3, [d, d], eps)
        assert dyn.den_map(d[0], d[1], eps) == (want[0], want[1])


def test_den_map_matches_batch_pushforward_float():
    P = _random_simplex(1000, 2)
    for eps in (0.0, 0.07, 0.16):
        Q = dyn.MapSpec("den", eps).apply(P)
        n0, n1 = dyn.den_map(P[:, 0], P[:, 1], eps)
        assert np.max(np.abs(Q[:, 0] - n0)) < 1e-12 and np.max(np.abs(Q[:, 1] - n1)) < 1e-12


def test_xy_form_is_conjugate():
    P = _random_simplex(100, 3)
    for eps in (0.0, 0.1, 1 / 6, 0.3):
        x, y = p01_to_xy(P[:, 0], P[:, 1])
        x2, y2 = dyn.den_map_xy(x, y, eps)
        n0, n1 = dyn.den_map(P[:, 0], P[:, 1], eps)
        b0, b1 = xy_to_p01(x2, y2)
        assert np.max(np.abs(b0 - n0)) < 1e-12 and np.max(np.abs(b1 - n1)) < 1e-12
    assert dyn.den_map_xy(0.0, 0.0, 0.1) == (0.0, 0.0)
    x, y = 0.1, -0.2
    assert dyn.den_map_xy(x, y, 1 / 6) == pytest.approx((x * (1 - y), 1.5 * (x * x - y * y)))


def test_xy_form_preserves_sign_of_x():
    P = _random_simplex(2000, 4)
    x, y = p01_to_xy(P[:, 0], P[:, 1])
    for eps in (0.0, 0.1, 0.16):
        x2, _ = dyn.den_map_xy(x, y, eps)
        assert np.all(np.sign(x2) == np.sign(x))


def test_den_fixed_points_examples():
    pts = dyn.den_fixed_points(0)
    assert pts[0].dist.close_to(Dist.uniform(3, exact=False), 1e-15)
    assert pts[1].dist.close_to(Dist.of([1.0, 0.0, 0.0]), 1e-15)
    assert pts[2].dist.close_to(Dist.of([0.0, 1.0, 0.0]), 1e-15)
    assert [p.stability for p in pts] == ["unstable", "stable", "stable"]
    pp, pm = dyn.den_logical_weights(0.1)
    assert pp == pytest.approx((0.7 + math.sqrt(0.32)) / 1.7, abs=1e-15)
    assert pm == pytest.approx((0.7 - math.sqrt(0.32)) / 1.7, abs=1e-15)
    at = dyn.den_fixed_points(F(1, 6))
    assert all(p.dist.close_to(Dist.uniform(3, exact=False), 1e-15) for p in at)
    above = dyn.den_fixed_points(0.2)
    assert len(above) == 1 and above[0].stability == "stable"


def test_den_fixed_points_agree_with_iteration():
    for eps in (0.0, 0.05, 0.1, 0.15):
        p0, p1, ok = dyn.iterate_den(0.9, 0.05, eps)
        pp, pm = dyn.den_logical_weights(eps)
        assert ok and abs(p0 - pp) < 1e-10 and abs(p1 - pm) < 1e-10


def test_lyapunov_zero_at_fixed_point_and_nonnegative():
    for eps in (0.0, 0.01, 0.1, 0.16):
        xi = dyn.xi_of(eps)
        x, y = dyn.logical_fixed_point_xy(xi)
        assert abs(dyn.lyapunov_V(x, y, xi)) < 1e-12
        # and it is the DEN fixed point for logical 1
        p0, p1 = xy_to_p01(x, y)
        pp, pm = dyn.den_logical_weights(eps)
        assert abs(p0 - pm) < 1e-12 and abs(p1 - pp) < 1e-12
    P = _random_simplex(1000, 5)
    x, y = p01_to_xy(P[:, 0], P[:, 1])
    assert np.all(dyn.lyapunov_V(x, y, 0.4) >= 0)


def test_lyapunov_descent_sampled():
    rng = np.random.default_rng(6)
    for eps in (0.01, 0.1, 0.16):
        xi = dyn.xi_of(eps)
        P = dyn.sample_logical_region(4000, rng)
        x, y = p01_to_xy(P[:, 0], P[:, 1])
        x2, y2 = dyn.den_map_xy(x, y, eps)
        assert np.all(dyn.lyapunov_V(x2, y2, xi) <= dyn.lyapunov_V(x, y, xi) + 1e-12)


def test_enand_map_examples():
    assert dyn.enand_closed_form(0, 1, 0.0) == pytest.approx((0.0, 1.0))
    g = dyn.enand_closed_form(0, 1, 0.1)
    assert g == pytest.approx((0.22353, 0.57647), abs=5e-6)
    P0, P1 = dyn.logical_dist(0, 0.1), dyn.logical_dist(1, 0.1)
    out = dyn.enand_map(P0, P1, 0.1)
    assert decode(out).symbol == 1
    assert dyn.enand_map(P1, P0, 0.1).close_to(out, 1e-15)
    with pytest.raises(UnsupportedError):
        dyn.enand_map(Dist.uniform(4, exact=False), P0, 0.1)


def test_enand_map_matches_table_pushforward_exact():
    rng = np.random.default_rng(7)
    for _ in range(100):
        ds = []
        for _ in range(2):
            w = [int(x) + 1 for x in rng.integers(0, 30, size=3)]
            ds.append(Dist.of([F(x, sum(w)) for x in w]))
        eps = F(int(rng.integers(0, 50)), 100)
        assert list(dyn.enand_map(ds[0], ds[1], eps)) == pushforward_ref(enand_ref, 3, ds, eps)


def test_enand_closed_forms_match_pushforward():
    for eps in np.linspace(0, 0.16, 17):
        for u in (0, 1):
            for v in (0, 1):
                out = dyn.enand_map(dyn.logical_dist(u, eps), dyn.logical_dist(v, eps), eps)
                g = dyn.enand_closed_form(u, v, eps)
                assert abs(out[0] - g[0]) < 1e-12 and abs(out[1] - g[1]) < 1e-12


def test_enand_verify_examples():
    assert dyn.enand_verify(0)
    assert dyn.enand_verify(0.1)
    # the inequalities still hold just below 1/6; margins shrink to zero there
    c = dyn.enand_check(0.165)
    assert c.passed and 0 < min(c.margins.values()) < 0.05
    assert dyn.enand_verify(0.1666)
    at = dyn.enand_check(F(1, 6))
    assert not at.passed and at.reason == "no distinct logical fixed points"
    assert not dyn.enand_verify(0.2)


def test_basin_bounds_symmetric_is_tight():
    for a in (F(1, 10), F(1, 4), F(1, 2)):
        for eps in (0, F(1, 20), F(1, 10)):
            r = dyn.basin_bounds_check(symmetric_encode(3, 0, a), eps)
            assert r.alpha == r.lower == m_eps(a, eps, coeffs(3, 3))
            assert r.lower_ok and r.upper_ok


def test_basin_bounds_examples():
    r = dyn.basin_bounds_check(Dist.of([F(6, 10), F(3, 10), F(1, 10)]), F(1, 20))
    assert r.lower == m_eps(F(4, 10), F(1, 20), coeffs(3, 3))
    assert r.lower_ok and r.upper_ok
    r = dyn.basin_bounds_check(Dist.of([F(34, 100), F(33, 100), F(33, 100)]), F(4, 25))
    assert r.lower_ok
    with pytest.raises(ArgumentError):
        dyn.basin_bounds_check(Dist.of([0.4, 0.4, 0.2]), 0.1)
    with pytest.raises(ArgumentError):
        dyn.basin_bounds_check(Dist.of([0.2, 0.5, 0.3]), 0.1)


def test_basin_bounds_random_inputs_q3_q4():
    rng = np.random.default_rng(8)
    for q in (3, 4):
        for _ in range(150):
            w = sorted((int(x) + 1 for x in rng.integers(0, 40, size=q)), reverse=True)
            if w[0] == w[1]:
                continue
            d = Dist.of([F(x, sum(w)) for x in w])
            r = dyn.basin_bounds_check(d, F(int(rng.integers(0, 15)), 100))
            assert r.lower_ok and r.upper_ok


def test_maj_map_properties():
    for q, k in [(3, 3), (4, 3), (3, 5)]:
        for eps in (0, F(1, 10)):
            assert dyn.maj_map(Dist.uniform(q), eps, q, k) == Dist.uniform(q)
    out = dyn.maj_map(Dist.of([0.6, 0.3, 0.1]), 0.05)
    assert decode(out).symbol == 0
    err, m = dyn.symmetric_consistency(3, 3, F(1, 5), F(1, 20))
    assert err == m
    with pytest.raises(ArgumentError):
        dyn.maj_map(Dist.uniform(3), 0.1, q=4)


def test_maj_logical_fixed_point_at_transcritical_is_one_third_noisy():
    spec = dyn.MapSpec("maj", 1 / 6)
    res = dyn.iterate_batch(spec, np.array([[0.9, 0.05, 0.05]]))
    p = res.points[0]
    assert res.converged[0]
    assert p[0] == pytest.approx(2 / 3, abs=1e-9) and p[1] == pytest.approx(1 / 6, abs=1e-9)


def test_field_grid_rows():
    spec = dyn.MapSpec("den", 0.05)
    rows = dyn.field_grid(spec, 12)
    assert rows.shape == (91, 4)
    center = rows[np.argmin(np.hypot(rows[:, 0], rows[:, 1]))]
    assert abs(center[0]) < 1e-12 and abs(center[1]) < 1e-8
    assert np.hypot(center[2], center[3]) < 1e-8
    with pytest.raises(UnsupportedError):
        dyn.field_grid(dyn.MapSpec("maj", 0.1, q=4), 5)


def test_sink_census_den_two_logical_sinks():
    sinks = dyn.sink_census(dyn.MapSpec("den", 0.05), 30)
    stable = [s for s in sinks if s.stability == "stable"]
    assert len(stable) == 2 and {s.region for s in stable} == {0, 1}
    pp, pm = dyn.den_logical_weights(0.05)
    for s in stable:
        want = (pp, pm) if s.region == 0 else (pm, pp)
        assert s.dist[0] == pytest.approx(want[0], abs=1e-9) and s.dist[1] == pytest.approx(want[1], abs=1e-9)


def test_sink_census_maj_four_sinks_between_bifurcations():
    sinks = dyn.sink_census(dyn.MapSpec("maj", 0.17), 30)
    assert len(sinks) == 4 and all(s.stability == "stable" for s in sinks)
    assert {s.region for s in sinks} == {0, 1, 2, "center"}
    sinks = dyn.sink_census(dyn.MapSpec("maj", 0.1), 30)
    assert sorted(str(s.region) for s in sinks if s.stability == "stable") == ["0", "1", "2"]


def test_den_iteration_regions():
    rng = np.random.default_rng(9)
    for eps in (0.0, 0.05, 0.1, 0.15):
        P = rng.dirichlet(np.ones(3), size=100)
        P = P[np.abs(P[:, 0] - P[:, 1]) > 1e-3]
        p0, p1, ok = dyn.iterate_den(P[:, 0], P[:, 1], eps)
        assert ok
        pp, pm = dyn.den_logical_weights(eps)
        want0 = np.where(P[:, 0] > P[:, 1], pp, pm)
        assert np.max(np.abs(p0 - want0)) < 1e-10
    s = np.linspace(0.01, 0.49, 25)
    for eps in (0.0, 0.1):
        p0, p1, ok = dyn.iterate_den(s, s, eps)
        assert ok and np.max(np.abs(p0 - 1 / 3)) < 1e-10 and np.max(np.abs(p1 - 1 / 3)) < 1e-10


def test_map_spec_validation():
    with pytest.raises(ArgumentError):
        dyn.MapSpec("xor", 0.1)
    with pytest.raises(UnsupportedError):
        dyn.MapSpec("den", 0.1, q=4)
    with pytest.raises(ArgumentError):
        dyn.MapSpec("enand", 0.1)
    with pytest.raises(ArgumentError):
        dyn.MapSpec("den", 1.5)
