"""Kernel table against an independent exact-enumeration oracle.

The oracle walks the step recursion over a plain dict of Fractions, with
no shared code with the array implementation.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc, exp1

from epibranch.lattice_kernel import (
    BoxFunction,
    GaussKernel,
    KernelTable,
    WalkSpec,
    build_kernel_table,
    clip_radius,
    gaussian_bump,
    green_convolve,
    green_interpolate,
    indicator_ball,
    rescaled_green_field,
    shifted_accumulate,
    stencil_step,
    verify_table_invariants,
)


def oracle_kernel(d: int, n: int) -> dict:
    """Exact n-step site masses by dict dynamic programming."""
    moves = [(0,) * d]
    for axis in range(d):
        for sign in (-1, 1):
            move = [0] * d
            move[axis] = sign
            moves.append(tuple(move))
    w = Fraction(1, 2 * d + 1)
    cur = {(0,) * d: Fraction(1)}
    for _ in range(n):
        nxt: dict = {}
        for site, mass in cur.items():
            share = mass * w
            for move in moves:
                tgt = tuple(a + b for a, b in zip(site, move))
                nxt[tgt] = nxt.get(tgt, Fraction(0)) + share
        cur = nxt
    return cur


# -- exact anchors ----------------------------------------------------------


def test_hand_counted_anchors_d2(table_d2):
    # 1 holding path of 1 out of 5
    assert table_d2.probability(1, (0, 0)) == pytest.approx(0.2, abs=1e-15)
    # return in two steps: hold twice or out-and-back along 4 arrows
    assert table_d2.probability(2, (0, 0)) == pytest.approx(0.2, abs=1e-15)
    # G_3(0) = 1 + 1/5 + 1/5
    assert table_d2.green_at(3, (0, 0)) == pytest.approx(1.4, abs=1e-14)
    # G_2(e1) = P_0(e1) + P_1(e1) = 0 + 1/5
    assert table_d2.green_at(2, (1, 0)) == pytest.approx(0.2, abs=1e-15)


def test_hand_counted_anchors_d3(table_d3):
    assert table_d3.probability(1, (0, 0, 0)) == pytest.approx(1 / 7, abs=1e-15)
    assert table_d3.probability(2, (0, 0, 0)) == pytest.approx(1 / 7, abs=1e-15)
    assert table_d3.probability(1, (0, 0, 1)) == pytest.approx(1 / 7, abs=1e-15)


@pytest.mark.parametrize("d,n_top", [(2, 6), (3, 4)])
def test_enumeration_oracle_small_steps(d, n_top, table_d2, table_d3):
    table = table_d2 if d == 2 else table_d3
    for n in range(n_top + 1):
        exact = oracle_kernel(d, n)
        box = table.kernel(n)
        seen = 0
        for site, value in box.sites():
            want = float(exact.get(site, Fraction(0)))
            assert value == pytest.approx(want, abs=5e-16), (n, site)
            seen += value != 0.0
        assert seen == sum(1 for v in exact.values() if v)


def test_green_matches_oracle_partial_sums(table_d2):
    acc: dict = {}
    for n in range(5):
        box = table_d2.green(n)
        for site, mass in acc.items():
            assert box.at(site) == pytest.approx(float(mass), abs=1e-14)
        for site, mass in oracle_kernel(2, n).items():
            acc[site] = acc.get(site, Fraction(0)) + mass


# -- invariants -------------------------------------------------------------


def test_streaming_invariants_pass_midscale():
    rep2 = verify_table_invariants(WalkSpec(2), 60)
    assert rep2.passed, rep2
    rep3 = verify_table_invariants(WalkSpec(3), 30)
    assert rep3.passed, rep3
    assert rep2.mass_error_max < 1e-12
    assert rep2.chapman_kolmogorov_error_max < 1e-10


def test_green_increments_recover_kernel(table_d2):
    for n in (0, 3, 17):
        g0 = table_d2.green(n)
        g1 = table_d2.green(n + 1)
        p = table_d2.kernel(n)
        for site, value in p.sites():
            assert g1.at(site) - g0.at(site) == pytest.approx(value, abs=1e-12)


def test_chapman_kolmogorov_direct(table_d2):
    m, n = 3, 4
    pm = table_d2.kernel(m)
    pn = table_d2.kernel(n)
    pmn = table_d2.kernel(m + n)
    for x in [(0, 0), (1, 2), (-3, 1), (7, 0)]:
        acc = 0.0
        for z, val in pm.sites():
            acc += val * pn.at((x[0] - z[0], x[1] - z[1]))
        assert pmn.at(x) == pytest.approx(acc, abs=1e-12)


def test_boundary_sites_exact_products(table_d2, table_d3):
    edge = 1.0
    for i in range(1, 13):
        edge *= 0.2
        assert table_d2.probability(i, (i, 0)) == edge
    edge = 1.0
    for i in range(1, 9):
        edge *= 1.0 / 7.0
        assert table_d3.probability(i, (0, i, 0)) == edge


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=25),
    x=st.tuples(st.integers(-25, 25), st.integers(-25, 25)),
    swap=st.booleans(),
    sx=st.sampled_from((-1, 1)),
    sy=st.sampled_from((-1, 1)),
)
def test_signed_permutation_symmetry_is_bitwise(table_d2, n, x, swap, sx, sy):
    base = table_d2.probability(n, x)
    image = (sy * x[1], sx * x[0]) if swap else (sx * x[0], sy * x[1])
    assert table_d2.probability(n, image) == base


def test_clip_radius_policy():
    for i in range(0, 65):
        assert clip_radius(i) == i
    prev = 0
    for i in range(0, 3000):
        r = clip_radius(i)
        assert r <= i
        assert r >= min(i, math.ceil(8.0 * math.sqrt(i)) if i else 0)
        assert r >= prev
        prev = r


def test_stencil_rejects_bad_dimension():
    with pytest.raises(ValueError):
        stencil_step(np.ones((3, 3)), d=4)


# -- box functions ----------------------------------------------------------


def test_box_interpolation_exact_on_sites_and_linear_between():
    values = np.arange(9.0).reshape(3, 3)
    box = BoxFunction(values, (-1, -1))
    for i in range(-1, 2):
        for j in range(-1, 2):
            assert box.interpolate((float(i), float(j))) == box.at((i, j))
    mid = box.interpolate((0.5, 0.0))
    assert mid == pytest.approx(0.5 * (box.at((0, 0)) + box.at((1, 0))))
    corner_mid = box.interpolate((0.5, 0.5))
    want = 0.25 * sum(box.at(s) for s in [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert corner_mid == pytest.approx(want)
    assert box.interpolate((5.0, 5.0)) == 0.0


def test_shifted_accumulate_matches_direct_sum(table_d2):
    g = table_d2.green(6)
    mu = [((0, 0), 2.0), ((1, 0), 1.0), ((-2, 3), 4.0)]
    acc = shifted_accumulate(g, mu)
    for x in [(0, 0), (1, 1), (-2, 3), (4, -2)]:
        want = sum(c * g.at((x[0] - s[0], x[1] - s[1])) for s, c in mu)
        assert acc.at(x) == pytest.approx(want, rel=1e-14, abs=1e-300)


def test_green_convolve_and_interpolate(table_d2):
    mu = {(0, 0): 2, (1, 0): 1}
    field = green_convolve(table_d2, mu, 4)
    want = 2.0 * table_d2.green_at(4, (1, 1)) + table_d2.green_at(4, (0, 1))
    assert field.at((1, 1)) == pytest.approx(want, rel=1e-14)
    v3 = green_convolve(table_d2, mu, 3).at((1, 1))
    v4 = field.at((1, 1))
    mid = green_interpolate(table_d2, mu, 3.25, (1.0, 1.0))
    assert mid == pytest.approx(0.75 * v3 + 0.25 * v4, rel=1e-12)


# -- caching ----------------------------------------------------------------


def test_cache_round_trip(tmp_path):
    path = str(tmp_path / "kernel.bin")
    spec = WalkSpec(2)
    built = build_kernel_table(spec, 12, cache_path=path)
    loaded = KernelTable.load(path)
    assert loaded.d == 2 and loaded.n_max == 12
    for i in range(13):
        assert np.array_equal(loaded.kernel(i).values, built.kernel(i).values)
    reused = build_kernel_table(spec, 9, cache_path=path)
    assert reused.n_max == 12


def test_rebuild_is_bit_identical():
    a = KernelTable(WalkSpec(3), 9)
    b = KernelTable(WalkSpec(3), 9)
    for i in range(10):
        assert np.array_equal(a.kernel(i).values, b.kernel(i).values)


# -- Gaussian comparison kernel ---------------------------------------------


def test_gauss_density_formula():
    gauss = GaussKernel(2)
    x = np.array([1.5, -0.5])
    want = math.exp(-np.dot(x, x) / (2 * 3.0)) / (2 * math.pi * 3.0)
    assert gauss.density(3.0, x) == pytest.approx(want, rel=1e-15)
    gauss3 = GaussKernel(3)
    y = np.array([0.5, 1.0, -2.0])
    want3 = math.exp(-np.dot(y, y) / 4.0) / (2 * math.pi * 2.0) ** 1.5
    assert gauss3.density(2.0, y) == pytest.approx(want3, rel=1e-15)


def test_occupation_against_closed_forms():
    # d=2: integral of the heat kernel equals exp1(|x|^2/(2t)) / (2 pi)
    gauss = GaussKernel(2)
    for t, x in [(1.0, (1.0, 0.0)), (2.5, (0.5, -1.5)), (10.0, (3.0, 4.0))]:
        sq = x[0] ** 2 + x[1] ** 2
        want = exp1(sq / (2 * t)) / (2 * math.pi)
        assert gauss.occupation(t, x) == pytest.approx(want, rel=1e-9)
    # d=3: erfc(|x| / sqrt(2t)) / (2 pi |x|)
    gauss3 = GaussKernel(3)
    for t, x in [(1.0, (1.0, 0.0, 0.0)), (4.0, (0.5, 0.5, 1.0))]:
        r = math.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2)
        want = erfc(r / math.sqrt(2 * t)) / (2 * math.pi * r)
        assert gauss3.occupation(t, x) == pytest.approx(want, rel=1e-9)


def test_occupation_diverges_at_origin():
    for d in (2, 3):
        with pytest.raises(ValueError):
            GaussKernel(d).occupation(1.0, (0.0,) * d)


def test_occupation_dominated_by_endpoint_rectangle():
    # the integrand increases in s up to s = |x|^2 / d, so for |x|^2 >= d t
    # the whole integral sits below t * density(t, x)
    for d in (2, 3):
        gauss = GaussKernel(d)
        for t in (0.5, 1.0, 3.0):
            for scale in (1.0, 1.3, 2.0):
                x = np.zeros(d)
                x[0] = math.sqrt(d * t) * scale
                q = gauss.occupation(t, x)
                assert q <= t * gauss.density(t, x) * (1 + 1e-12)


def test_pair_density_is_sum_of_densities():
    gauss = GaussKernel(2)
    x = np.array([1.0, 2.0])
    y = np.array([-0.5, 0.5])
    want = gauss.density(2.0, x) + gauss.density(2.0, y)
    assert gauss.pair_density(2.0, x, y) == pytest.approx(want, rel=1e-14)


# -- test functions and the rescaled field ----------------------------------


def test_bump_support_and_bound():
    psi = gaussian_bump(2, radius=2.0, height=3.0)
    assert psi.bound == 3.0
    assert psi((np.zeros(2),))[0] == pytest.approx(3.0)
    assert psi(np.array([2.0, 0.0])) == 0.0
    assert psi(np.array([5.0, 5.0])) == 0.0
    inside = psi(np.array([0.5, 0.5]))
    assert 0.0 < inside < 3.0


def test_indicator_support():
    psi = indicator_ball(3, radius=1.5, height=2.0)
    assert psi(np.zeros(3)) == 2.0
    assert psi(np.array([1.6, 0.0, 0.0])) == 0.0


def test_rescaled_field_matches_direct_sum(table_d2):
    psi = gaussian_bump(2, radius=1.0, height=1.0)
    k, t = 4, 3.0
    field = rescaled_green_field(table_d2, psi, k, t)
    root_k = math.sqrt(k)
    for j in [(0, 0), (1, 0), (-2, 3)]:
        want = 0.0
        for y0 in range(-2, 3):
            for y1 in range(-2, 3):
                w = float(psi(np.array([y0, y1]) / root_k))
                if w:
                    want += w * table_d2.green_at(12, (j[0] - y0, j[1] - y1)) / k
        assert field.at_site(j) == pytest.approx(want, rel=1e-12, abs=1e-300)
    assert field.interpolate((0.25, 0.0)) == pytest.approx(
        0.5 * field.at_site((0, 0)) + 0.5 * field.at_site((1, 0)), rel=1e-12
    )


def test_rescaled_field_respects_sup_bound(table_d2):
    psi = indicator_ball(2, radius=1.5, height=2.0)
    for t in (1.0, 5.0, 16.0):
        field = rescaled_green_field(table_d2, psi, 4, t)
        assert field.grid.max_abs() <= 2.0 * t * (1 + 1e-9) + 1e-12


def test_rescaled_field_rejects_fractional_steps(table_d2):
    psi = gaussian_bump(2)
    with pytest.raises(ValueError):
        rescaled_green_field(table_d2, psi, 3, 0.5)
