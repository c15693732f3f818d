"""Domination-constant scans against hand-computable anchors."""

import json
import math

import numpy as np
import pytest

from epibranch.errors import HorizonError
from epibranch.kernel_bounds import (
    SUITE_IDS,
    BoundReport,
    BoundScan,
    default_scan,
    verify_bounds,
)
from epibranch.lattice_kernel import WalkSpec, green_checkpoints


SMALL = BoundScan(
    step_ladder=(1, 2, 4),
    pair_ladder=(2, 4),
    smooth_spans=(1, 4),
    window_starts=(1, 4),
    green_scale=30,
    box_radius=12,
    pair_radius=4,
)


def test_single_step_anchor(table_d2):
    # P_1 puts mass 1/5 on the origin and its four neighbors; the ratio
    # against the unit-time Gaussian is 2pi/5 at the origin and picks up
    # exp(beta^2/2) one site out, which is where the maximum sits.
    scan = BoundScan(step_ladder=(1,))
    (rep,) = verify_bounds(table_d2, "kernel_vs_gauss", scan)
    assert rep.passed
    expect = (2 * math.pi / 5) * math.exp(scan.beta**2 / 2)
    assert rep.constant == pytest.approx(expect, rel=1e-13)
    assert rep.witness["n"] == 1
    assert sorted(abs(c) for c in rep.witness["x"]) == [0, 1]


def test_two_step_origin_dominates_default_ladder(table_d2):
    # P_2(0) = 1/5 in d=2 against phi_2(0) = 1/(4pi): ratio 4pi/5, and
    # no other (n, x) on the default ladder beats it.
    reports = verify_bounds(table_d2, "kernel_vs_gauss")
    (rep,) = reports
    assert rep.constant == pytest.approx(4 * math.pi / 5, rel=1e-13)
    assert rep.witness["n"] == 2
    assert rep.witness["x"] == [0, 0]


def test_constant_monotone_in_ladder(table_d2):
    short = verify_bounds(table_d2, "kernel_vs_gauss", BoundScan(step_ladder=(1, 2)))
    longer = verify_bounds(
        table_d2, "kernel_vs_gauss", BoundScan(step_ladder=(1, 2, 4, 8, 16))
    )
    assert longer[0].constant >= short[0].constant


def test_suite_order_and_ids(table_d2):
    reports = verify_bounds(table_d2, "all", SMALL)
    assert [r.inequality for r in reports] == list(SUITE_IDS)
    for rep in reports:
        assert rep.passed, rep.as_json()
        assert rep.points > 0
        if rep.inequality == "radial_rearrangement":
            assert rep.constant is None
        else:
            assert rep.constant > 0


def test_reports_deterministic(table_d2):
    a = verify_bounds(table_d2, ("weighted_pair_convolution", "window_product"), SMALL)
    b = verify_bounds(table_d2, ("weighted_pair_convolution", "window_product"), SMALL)
    assert [r.as_json() for r in a] == [r.as_json() for r in b]


def test_as_json_round_trip(table_d2):
    (rep,) = verify_bounds(table_d2, "kernel_vs_gauss", BoundScan(step_ladder=(1,)))
    data = json.loads(rep.as_json())
    assert data["inequality"] == "kernel_vs_gauss"
    assert data["constant"] == rep.constant
    assert data["passed"] is True


def test_zero_rhs_guard_reports_failure(table_d2):
    # Push the Green scan past the kernel's finite support: the Gaussian
    # side stays positive while the walk side is exactly zero, which no
    # finite constant can fix, so the scan must fail with a witness.
    scan = BoundScan(green_scale=50, green_amplitude=9.0)
    (rep,) = verify_bounds(table_d2, "gauss_green_vs_walk_green", scan)
    assert not rep.passed
    assert rep.constant is None
    assert rep.witness["rhs"] == 0.0
    assert rep.witness["lhs"] > 0.0
    assert sum(c * c for c in rep.witness["x"]) > 50**2


def test_green_scan_matches_direct_sums(table_d2):
    # Re-derive the tracked ratio at a single site from raw kernels.
    scan = BoundScan(green_scale=20, green_amplitude=1.0)
    (rep,) = verify_bounds(table_d2, "gauss_green_vs_walk_green", scan)
    x = rep.witness["x"]
    sq = float(sum(c * c for c in x))
    lhs = sum(
        math.exp(-scan.beta**2 * sq / (2 * n)) / (2 * math.pi * n)
        for n in range(1, 21)
    )
    rhs = sum(table_d2.probability(n, x) for n in range(1, 21))
    assert rep.witness["lhs"] == pytest.approx(lhs, rel=1e-12)
    assert rep.witness["rhs"] == pytest.approx(rhs, rel=1e-12)


def test_increment_scan_covers_shifted_support(table_d2):
    # The witness for small n sits where one kernel value is zero and the
    # shifted one is not, so the scan grid must extend past the support.
    scan = BoundScan(step_ladder=(2,), pair_offsets=((5, 0),))
    (rep,) = verify_bounds(table_d2, "increment_vs_gauss_pair", scan)
    assert rep.passed
    a = table_d2.probability(2, rep.witness["x"])
    b = table_d2.probability(2, [c + o for c, o in zip(rep.witness["x"], (5, 0))])
    assert rep.witness["lhs"] == pytest.approx(abs(a - b), abs=1e-15)
    assert (a == 0.0) or (b == 0.0)


def test_hoelder_variant_scales_by_gamma_power(table_d2):
    # For a fixed (n, offset) block the two increment scans differ only
    # in the distance factor, so their constants are in exact ratio.
    scan = BoundScan(step_ladder=(4,), pair_offsets=((1, 0),))
    (plain,) = verify_bounds(table_d2, "increment_vs_gauss_pair", scan)
    (hoelder,) = verify_bounds(table_d2, "increment_vs_gauss_pair_gamma", scan)
    dist = 0.5  # |offset| / sqrt(n)
    factor = min(dist, 1.0) / dist**scan.gamma
    assert hoelder.constant == pytest.approx(plain.constant * factor, rel=1e-12)


def test_pair_product_small_case_by_hand(table_d2):
    # n = 2 keeps a single step term l = 1, so the functional is a plain
    # Gaussian pair sum and the ratio can be rebuilt directly.
    scan = BoundScan(
        pair_ladder=(2,), pair_offsets=((1, 0),), order_pairs=((1, 1),), pair_radius=2
    )
    (rep,) = verify_bounds(table_d2, "weighted_pair_product", scan)

    def pair(x):
        out = 0.0
        for base in (x, (x[0] + 1, x[1])):
            sq = scan.beta**2 * (base[0] ** 2 + base[1] ** 2)
            out += math.exp(-sq / 2) / (2 * math.pi)
        return out

    best = 0.0
    for i in range(-2, 3):
        for j in range(-2, 3):
            f = pair((i, j))
            best = max(best, f * f / (2.0 ** (2 - (2 + scan.gamma) / 2) * f))
    assert rep.constant == pytest.approx(best, rel=1e-12)


def test_rearrangement_equality_at_origin(table_d2):
    reports = verify_bounds(table_d2, "radial_rearrangement", SMALL)
    (rep,) = reports
    assert rep.passed
    # the worst excess is the rounding noise of the x = 0 equality case
    assert rep.witness["x"] == [0, 0]
    assert abs(rep.witness["excess"]) < 1e-12


def test_validation_rejects_bad_parameters(table_d2):
    with pytest.raises(ValueError, match="beta"):
        verify_bounds(table_d2, "kernel_vs_gauss", BoundScan(beta=0.8))
    with pytest.raises(ValueError, match="gamma"):
        verify_bounds(table_d2, "kernel_vs_gauss", BoundScan(gamma=1.5))
    with pytest.raises(ValueError, match="offset"):
        verify_bounds(
            table_d2, "increment_vs_gauss_pair", BoundScan(pair_offsets=((1, 0, 0),))
        )
    with pytest.raises(ValueError, match="unknown inequality"):
        verify_bounds(table_d2, "no_such_scan", SMALL)
    with pytest.raises(HorizonError):
        verify_bounds(table_d2, "gauss_green_vs_walk_green", BoundScan(green_scale=90))


def test_default_scan_pads_offsets_for_d3():
    scan = default_scan(3)
    assert all(len(off) == 3 for off in scan.pair_offsets)
    assert default_scan(2) == BoundScan()


def test_streaming_green_matches_table(table_d2):
    boxes = green_checkpoints(WalkSpec(2), [0, 7, 33])
    for n, box in boxes.items():
        ref = table_d2.green(n)
        assert np.array_equal(box.values, ref.values)
        assert box.lo == ref.lo
