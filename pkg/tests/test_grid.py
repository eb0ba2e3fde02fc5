import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelquad import accel
from levelquad.errors import EmptyBandWarning
from levelquad.geometry import make_circle_sdf, make_l1_ball
from levelquad.grid import GridSpec, Side, band_count, compensated_sum, iter_band_blocks, iterate_band


def test_node_convention():
    g = GridSpec(2, 100)
    x = g.axis()
    assert g.spacing == 0.02 and g.spacing * g.n_cells == 2.0
    assert x.size == 101 and x[0] == -1.0
    i = np.arange(101)
    assert np.array_equal(x, i * g.spacing - 1.0)
    pts = g.points()
    assert pts.shape == (101 * 101, 2)
    assert tuple(pts[102]) == (x[1], x[1])


def test_extended_grid_keeps_spacing():
    g = GridSpec(2, 200, extent=1.5)
    assert g.spacing == 0.01 and g.n_nodes == 301
    assert g.axis()[0] == -1.5 and g.axis()[-1] == pytest.approx(1.5)
    with pytest.raises(ValueError):
        GridSpec(2, 3, extent=1.1)


@pytest.mark.parametrize("bad", [dict(dim=4, n_cells=10), dict(dim=2, n_cells=1), dict(dim=2, n_cells=10, extent=0.5)])
def test_gridspec_validation(bad):
    with pytest.raises(ValueError):
        GridSpec(**bad)


def test_blocks_partition_axis0():
    g = GridSpec(3, 40)
    blocks = g.blocks(block_nodes=5000)
    assert blocks[0][0] == 0 and blocks[-1][1] == g.n_nodes
    assert all(a[1] == b[0] for a, b in zip(blocks, blocks[1:]))


def test_iterate_band_circle_example():
    g = GridSpec(2, 100)
    f = make_circle_sdf(0.501)
    nodes = list(iterate_band(g, f, 0.2, Side.BOTH))
    assert len(nodes) > 0
    assert all(abs(phi) <= 0.2 for _, _, phi in nodes)
    idx = [n[0] for n in nodes]
    assert idx == sorted(idx)
    for (i, j), p, phi in nodes[:50]:
        assert tuple(p) == (i * g.spacing - 1.0, j * g.spacing - 1.0)
        assert phi == f.phi(p)


def test_iterate_band_empty_warns():
    g = GridSpec(2, 10)
    f = make_circle_sdf(0.5)  # nodes sit at distance 0.1 from the circle at best... check:
    smallest = np.min(np.abs(f.phi(g.points())))
    with pytest.warns(EmptyBandWarning):
        assert list(iterate_band(g, f, smallest / 2, Side.BOTH)) == []


def test_both_is_union_of_sides_plus_zero():
    g = GridSpec(2, 40)
    f = make_l1_ball(2, 0.5)  # many nodes land exactly on the level set
    both = {t[0] for t in iterate_band(g, f, 0.3, "both")}
    pos = {t[0] for t in iterate_band(g, f, 0.3, "positive")}
    neg = {t[0] for t in iterate_band(g, f, 0.3, "negative")}
    zero = {t[0] for t in iterate_band(g, f, 0.3, "both") if t[2] == 0.0}
    assert zero and not (pos & neg) and not (pos & zero) and not (neg & zero)
    assert both == pos | neg | zero
    assert len(both) == len(pos) + len(neg) + len(zero)


def test_side_counts_roughly_balanced():
    g = GridSpec(2, 400)
    f = make_circle_sdf(0.501)
    eps = 0.1
    pos = band_count(g, f, eps, "positive")
    neg = band_count(g, f, eps, "negative")
    # annulus areas differ by 2 pi eps^2; allow a perimeter-sized lattice term
    expected = 2 * math.pi * eps * eps / g.spacing ** 2
    perimeter_nodes = 2 * math.pi * 0.7 / g.spacing
    assert abs((pos - neg) - expected) <= 2 * perimeter_nodes


def test_band_blocks_shift():
    g = GridSpec(2, 100)
    f = make_circle_sdf(0.5)
    n = sum(len(b) for b in iter_band_blocks(g, f, 0.05, "negative", shift=-0.05))
    for b in iter_band_blocks(g, f, 0.05, "negative", shift=-0.05):
        assert np.all((b.phi + 0.05 < 0) & (b.phi + 0.05 >= -0.05))
    assert n > 0


def test_compensated_sum_examples(backend):
    assert compensated_sum([]) == 0.0
    assert compensated_sum([0.1] * 10**6) == pytest.approx(1e5, abs=1e-10)
    assert compensated_sum([1e100, 1.0, -1e100]) == 1.0


def test_compensated_sum_chunking_is_bitwise_stable(backend):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(100_000) * 10.0 ** rng.integers(-8, 8, 100_000)
    one = compensated_sum(x, 1)
    for chunks in (2, 16, 97):
        assert compensated_sum(x, chunks) == one
    assert one == math.fsum(x.tolist())


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e12, 1e12, allow_nan=False), max_size=200), st.integers(1, 20), st.randoms())
def test_compensated_sum_is_correctly_rounded(values, chunks, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert compensated_sum(values, chunks) == math.fsum(values) == compensated_sum(shuffled)


def test_exact_partials_backends_agree():
    if accel.numba is None:
        pytest.skip("numba not installed")
    rng = random.Random(4)
    vals = np.array([rng.uniform(-1, 1) * 10 ** rng.randint(-20, 20) for _ in range(5000)])
    got = {}
    for b in ("numba", "numpy"):
        prev = accel.set_backend(b)
        try:
            got[b] = math.fsum(accel.exact_partials(vals))
        finally:
            accel.set_backend(prev)
    assert got["numba"] == got["numpy"] == math.fsum(vals.tolist())
