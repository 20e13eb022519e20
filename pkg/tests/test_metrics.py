import math

import numpy as np
import pytest

from graphdraw.graph import build_graph, path_graph, cycle_graph, all_pairs_distances
from graphdraw.metrics import (
    StressReport,
    euclidean_distances,
    stress,
    optimal_scale,
    scale_invariant_stress,
    graph_stress_report,
)


def naive_stress(dist, pos):
    """Direct double loop over ordered pairs. Oracle."""
    n = pos.shape[0]
    total = 0.0
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            d = float(dist[u, v])
            delta = np.linalg.norm(pos[u] - pos[v])
            total += (delta - d) ** 2 / d ** 2
    return total


def golden_section(f, lo, hi, tol=1e-12, iters=300):
    """Plain golden-section minimizer. Oracle for the closed-form scale."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def l_shape_case():
    g = path_graph(3)
    pos = np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]])
    dist = all_pairs_distances(g)
    return dist, pos


def test_stress_matches_naive_loop():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(3, 15))
        g = cycle_graph(max(3, n))
        dist = all_pairs_distances(g)
        pos = rng.normal(size=(g.n, 2))
        assert stress(dist, pos) == pytest.approx(naive_stress(dist, pos), rel=1e-12)


def test_l_shape_handworked_values():
    dist, pos = l_shape_case()
    # only the end pair is strained: d=2, |delta|=sqrt(2), twice (ordered)
    expect_raw = 2.0 * 0.25 * (math.sqrt(2.0) - 2.0) ** 2
    assert stress(dist, pos) == pytest.approx(expect_raw, rel=1e-14)
    # alpha = (1 + 1 + sqrt(2)/2) / (1 + 1 + 2/4)
    expect_alpha = (2.0 + math.sqrt(2.0) / 2.0) / 2.5
    assert optimal_scale(dist, pos) == pytest.approx(expect_alpha, rel=1e-14)
    rep = scale_invariant_stress(dist, pos)
    assert rep.scale_invariant == pytest.approx(naive_stress(dist, expect_alpha * pos),
                                                rel=1e-13)
    assert rep.normalized == pytest.approx(rep.scale_invariant / 9.0, rel=1e-14)


def test_optimal_scale_against_golden_section():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(3, 20))
        # cycle plus random chords: connected by construction
        edges = [(i, (i + 1) % n) for i in range(n)]
        for _ in range(int(rng.integers(0, n))):
            u, v = rng.integers(0, n, size=2)
            if u != v:
                edges.append((int(u), int(v)))
        g = build_graph(n, edges)
        dist = all_pairs_distances(g)
        pos = rng.normal(size=(n, 2))
        a_closed = optimal_scale(dist, pos)
        a_gold = golden_section(lambda a: naive_stress(dist, a * pos), 1e-3, 1e3)
        assert a_closed == pytest.approx(a_gold, abs=1e-7)


def test_scale_invariance_under_uniform_scaling():
    dist, pos = l_shape_case()
    base = scale_invariant_stress(dist, pos).scale_invariant
    for c in (0.1, 3.0, 42.0):
        scaled = scale_invariant_stress(dist, c * pos).scale_invariant
        assert scaled == pytest.approx(base, rel=1e-9)


def test_stress_quadratic_in_scale():
    # stress(a * pos) is exactly quadratic in a, so the central difference
    # at the optimum is zero up to roundoff
    dist, pos = l_shape_case()
    a = optimal_scale(dist, pos)
    h = 1e-3
    fd = (stress(dist, (a + h) * pos) - stress(dist, (a - h) * pos)) / (2 * h)
    assert abs(fd) < 1e-10


def test_degenerate_and_tiny_layouts():
    dist, pos = l_shape_case()
    rep = scale_invariant_stress(dist, np.zeros_like(pos))
    assert rep.alpha == 1.0
    assert rep.raw == rep.scale_invariant
    one = scale_invariant_stress(np.zeros((1, 1)), np.zeros((1, 2)))
    assert one == StressReport(0.0, 1.0, 0.0, 0.0)


def test_disconnected_rejected():
    g = build_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(ValueError):
        graph_stress_report(g, np.zeros((4, 2)))


def test_euclidean_distances_matches_norm():
    rng = np.random.default_rng(5)
    pos = rng.normal(size=(17, 3))
    d = euclidean_distances(pos)
    for u in range(17):
        for v in range(17):
            assert d[u, v] == pytest.approx(np.linalg.norm(pos[u] - pos[v]), abs=1e-12)


def test_fsum_path_agrees_with_plain_sum():
    # force the compensated path by monkeypatching the threshold
    import graphdraw.metrics as m

    rng = np.random.default_rng(9)
    g = cycle_graph(30)
    dist = all_pairs_distances(g)
    pos = rng.normal(size=(30, 2))
    plain = stress(dist, pos)
    old = m._FSUM_THRESHOLD
    try:
        m._FSUM_THRESHOLD = 1
        comp = stress(dist, pos)
    finally:
        m._FSUM_THRESHOLD = old
    assert comp == pytest.approx(plain, rel=1e-13)
