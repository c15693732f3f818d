"""Sparse fields, scaling pairings, and the initial-configuration families."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epibranch.fields import (
    LatticeField,
    ball_bounded_family,
    build_family,
    custom_family,
    feller_pairing,
    point_mass_family,
    point_spread_family,
    radial_spike_family,
    validate_family_invariants,
    validate_spread,
)


def test_field_counts_and_mass():
    mu = LatticeField(2, {(0, 0): 2, (1, -3): 5})
    assert mu[(0, 0)] == 2
    assert mu[(9, 9)] == 0
    assert mu.total_mass() == 7
    assert mu.support() == [(0, 0), (1, -3)]
    assert mu.max_count() == 5
    assert mu.support_radius() == pytest.approx(math.sqrt(10))


def test_field_rejects_negative_and_wrong_dim():
    with pytest.raises(ValueError):
        LatticeField(2, {(0, 0): -1})
    with pytest.raises(ValueError):
        LatticeField(2, {(0, 0, 0): 1})
    with pytest.raises(ValueError):
        LatticeField(4)


def test_from_pairs_accumulates():
    mu = LatticeField.from_pairs(2, [((0, 0), 1), ((0, 0), 2), ((1, 1), 3), ((1, 1), -3)])
    assert mu[(0, 0)] == 3
    assert mu[(1, 1)] == 0
    assert len(mu) == 1


def test_field_equality_and_add():
    a = LatticeField(2, {(0, 0): 1})
    b = LatticeField(2, {(1, 0): 2})
    c = a.added(b)
    assert c[(0, 0)] == 1 and c[(1, 0)] == 2
    assert a == LatticeField(2, {(0, 0): 1})
    assert a != b


sites_st = st.dictionaries(
    st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
    st.integers(min_value=1, max_value=10**6),
    max_size=20,
)


@settings(max_examples=50, deadline=None)
@given(sites=sites_st)
def test_csv_round_trip(sites):
    mu = LatticeField(2, sites)
    again = LatticeField.from_csv(mu.to_csv())
    assert again == mu


def test_csv_layout_is_sorted_with_header():
    mu = LatticeField(2, {(2, 0): 1, (-1, 5): 3})
    assert mu.to_csv() == "x,y,count\n-1,5,3\n2,0,1\n"
    mu3 = LatticeField(3, {(0, 0, 1): 2})
    assert mu3.to_csv().splitlines()[0] == "x,y,z,count"


def test_array_round_trip():
    mu = LatticeField(2, {(3, -2): 4, (0, 1): 1})
    coords, counts = mu.to_arrays()
    assert coords.tolist() == [[0, 1], [3, -2]]
    assert counts.tolist() == [1, 4]
    assert LatticeField.from_arrays(coords, counts) == mu


def test_feller_pairing_hand_value():
    mu = LatticeField(2, {(0, 0): 2, (1, 0): 3})
    got = feller_pairing(mu, 4, lambda x: x[..., 0] + 1.0)
    # (1/4) * (2 * 1 + 3 * 1.5)
    assert got == pytest.approx(1.625, abs=1e-15)
    assert feller_pairing(LatticeField(2), 4, lambda x: x[..., 0]) == 0.0


@settings(max_examples=40, deadline=None)
@given(sites=sites_st, scale=st.integers(1, 100))
def test_feller_pairing_is_linear_in_counts(sites, scale):
    mu = LatticeField(2, sites)
    doubled = LatticeField(2, {s: 2 * c for s, c in sites.items()})
    psi = lambda x: np.cos(x[..., 0]) + x[..., 1] ** 2
    a = feller_pairing(mu, scale, psi)
    b = feller_pairing(doubled, scale, psi)
    assert b == pytest.approx(2 * a, rel=1e-12, abs=1e-12)


# -- families ----------------------------------------------------------------


def test_point_spread_structure():
    fam = point_spread_family(2)
    for k in (1, 7, 90, 300):
        mu = fam.field(k)
        assert mu.total_mass() == k
        assert mu.max_count() == 1
        validate_family_invariants(fam, k)
    # nearest-site packing: the 5 closest sites are the origin + 4 arrows
    assert set(fam.field(5).support()) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_point_spread_with_cap():
    fam = point_spread_family(2, per_site_cap=3)
    mu = fam.field(10)
    assert mu.total_mass() == 10
    assert mu.max_count() == 3
    validate_family_invariants(fam, 10)


def test_point_spread_rejects_three_dimensions():
    with pytest.raises(ValueError):
        point_spread_family(3)


def test_ball_bounded_structure():
    fam = ball_bounded_family()
    for k in (1, 27, 60):
        mu = fam.field(k)
        assert mu.total_mass() == k
        assert mu.max_count() == 1
        validate_family_invariants(fam, k)


def test_radial_spike_profile_and_mass():
    fam = radial_spike_family(alpha=1.0)
    for k in (64, 256):
        mu = fam.field(k)
        validate_family_invariants(fam, k)
        assert mu[(0, 0)] == int(math.sqrt(k))
        for site in [(1, 0), (3, 4), (0, 7)]:
            sq = site[0] ** 2 + site[1] ** 2
            assert mu[site] == math.floor(math.sqrt(k / (sq + 1)))


def test_radial_spike_rejects_bad_alpha():
    for alpha in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            radial_spike_family(alpha=alpha)


def test_point_mass_is_concentrated():
    fam = point_mass_family(2)
    mu = fam.field(9)
    assert mu.support() == [(0, 0)]
    assert mu.total_mass() == 9
    validate_family_invariants(fam, 9)


def test_build_family_registry():
    fam = build_family("radial_spike", alpha=0.8)
    assert fam.kind == "radial_spike"
    with pytest.raises(ValueError):
        build_family("no_such_family")


def test_custom_family_wrapper():
    fam = custom_family(
        2,
        lambda k: LatticeField(2, {(0, 0): k}),
        mass_bounds=(1.0, 1.0),
        support_factor=1.0,
        spread_target=100.0,
    )
    validate_family_invariants(fam, 5)


# -- exact spread scan --------------------------------------------------------


def test_spread_scan_flat_families_pass(table_d2, table_d3):
    rep = validate_spread(point_spread_family(2), [16, 64], [0.25, 1.0], table_d2)
    assert rep.passed
    assert all(v <= 0.7 for v in rep.table.values())
    rep3 = validate_spread(ball_bounded_family(), [8, 27], [0.5, 1.0], table_d3)
    assert rep3.passed
    rep_r = validate_spread(radial_spike_family(alpha=1.0), [16, 64], [0.25, 1.0], table_d2)
    assert rep_r.passed


def test_spread_scan_flags_concentration(table_d2):
    rep = validate_spread(point_mass_family(2), [16, 64], [0.25, 1.0], table_d2)
    assert not rep.passed
    # the peak grows along k at fixed t: the telltale log(kt) signature
    assert rep.stat(64, 1.0) > rep.stat(16, 1.0) > rep.target


def test_spread_scan_respects_horizon(table_d2):
    from epibranch.errors import HorizonError

    with pytest.raises(HorizonError):
        validate_spread(point_spread_family(2), [64], [2.0], table_d2)
