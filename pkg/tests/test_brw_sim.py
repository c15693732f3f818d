"""Branching-walk simulators against exact kernel and law facts.

The literal per-replicate runner and the packed ensemble engine are
independent implementations of the same process; tests check each
against closed-form moments and against each other.
"""

import math
from functools import partial

import numpy as np
import pytest

from epibranch.brw_sim import Trajectory, brw_run, brw_step
from epibranch.engine import (
    MomentRecorder,
    OccupationRecorder,
    PairingRecorder,
    PowerRecorder,
    SiteCodec,
    run_ensemble,
)
from epibranch.errors import CapacityError, ExplosionError
from epibranch.fields import LatticeField
from epibranch.offspring import binomial_envelope, custom_law, poisson_unit
from epibranch.rng import derive


def _origin(d=2, count=1):
    return LatticeField.single(d, count=count)


# -- literal runner ----------------------------------------------------------


def test_single_child_law_preserves_mass():
    # one child always: the population is a single walking particle
    law = custom_law(2, (0, 1))
    traj = brw_run(_origin(), law, 50, master_seed=7)
    assert traj.horizon == 50
    for n, gen in enumerate(traj.fields):
        assert gen.total_mass() == 1
        assert gen.support_radius() <= n


def test_occupation_matches_partial_sums():
    law = poisson_unit(2)
    traj = brw_run(_origin(count=3), law, 6, master_seed=11)
    total = LatticeField(2)
    for n in range(len(traj.fields) + 1):
        assert traj.occupation(n) == total
        if n < len(traj.fields):
            total = total.added(traj.fields[n])
    assert traj.occupation(1) == traj[0]
    assert traj.window(1, 3) == traj[1].added(traj[2]).added(traj[3])


def test_poisson_step_mean_matches_kernel():
    # from one particle, each neighborhood site receives Poisson(1/5)
    law = poisson_unit(2)
    rng = derive(3, 0)
    reps = 20000
    sums = {}
    for _ in range(reps):
        out = brw_step(_origin(), law, rng)
        for site, c in out.items():
            sums[site] = sums.get(site, 0) + c
    for site in [(0, 0), (1, 0), (0, -1)]:
        mean = sums.get(site, 0) / reps
        se = math.sqrt(0.2 / reps)
        assert abs(mean - 0.2) < 4 * se


def test_envelope_law_respects_hard_cap():
    # with village size N, a site with c parents sends at most c*N
    # arrivals to each neighborhood site
    law = binomial_envelope(2, 1)
    rng = derive(5, 0)
    for _ in range(200):
        out = brw_step(_origin(count=3), law, rng)
        assert out.total_mass() <= 15
        assert all(c <= 3 for _, c in out.items())


def test_mass_is_a_martingale():
    law = custom_law(2, (0.5, 0, 0.5))
    rng = derive(9, 0)
    reps = 20000
    masses = np.empty(reps)
    for i in range(reps):
        masses[i] = brw_step(_origin(count=2), law, rng).total_mass()
    se = masses.std(ddof=1) / math.sqrt(reps)
    assert abs(masses.mean() - 2.0) < 4 * se


def test_explosion_budget_raises():
    law = custom_law(2, (0.25, 0.5, 0.25))
    with pytest.raises(ExplosionError):
        brw_run(_origin(count=100), law, 40, master_seed=1, particle_budget=150)


def test_run_is_deterministic_per_seed():
    law = poisson_unit(3)
    a = brw_run(_origin(3, count=20), law, 8, master_seed=42)
    b = brw_run(_origin(3, count=20), law, 8, master_seed=42)
    assert a.fields == b.fields
    assert a.total_masses() == b.total_masses()


def test_rng_and_seed_are_exclusive():
    law = poisson_unit(2)
    with pytest.raises(ValueError):
        brw_run(_origin(), law, 2)
    with pytest.raises(ValueError):
        brw_run(_origin(), law, 2, derive(1, 0), master_seed=1)


# -- site codec ---------------------------------------------------------------


def test_codec_round_trip():
    codec = SiteCodec(3, 11)
    rng = derive(1, 2)
    pts = rng.integers(-11, 12, size=(500, 3))
    idx = codec.site_index(pts)
    assert np.all(idx >= 0) and np.all(idx < codec.size)
    back = codec.coords(idx)
    assert np.array_equal(back, pts)


def test_codec_move_offsets_shift_indices():
    codec = SiteCodec(2, 5)
    moves = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
    offs = codec.move_offsets(moves)
    base = np.array([[2, -3], [0, 0], [-4, 4]])
    for move, off in zip(moves, offs):
        shifted = base + np.array(move)
        assert np.array_equal(codec.site_index(shifted), codec.site_index(base) + off)


def test_codec_rejects_out_of_box():
    codec = SiteCodec(2, 4)
    with pytest.raises(ValueError):
        codec.site_index(np.array([[5, 0]]))


# -- ensemble engine -----------------------------------------------------------


def _probe_box(radius, d=2):
    out = []
    rng = range(-radius, radius + 1)
    if d == 2:
        return [(i, j) for i in rng for j in rng]
    return [(i, j, k) for i in rng for j in rng for k in rng]


def test_engine_first_moments_match_kernel(table_d2):
    horizon = 6
    probes = _probe_box(2)
    recs = run_ensemble(
        _origin(), poisson_unit(2), horizon, 40000, 101,
        [partial(MomentRecorder, probes, (3, horizon))],
    )
    mom = recs[0]
    assert mom.reps == 40000
    mean, se = mom.x_mean_se()
    for g in (1, 3, 6):
        for j, site in enumerate(mom.probes):
            exact = table_d2.probability(g, site)
            assert abs(mean[g, j] - exact) < 4 * max(se[g, j], 1e-4)
    rmean, rse = mom.r_mean_se()
    for i, n in enumerate((3, horizon)):
        green = table_d2.green(n)
        for j, site in enumerate(mom.probes):
            assert abs(rmean[i, j] - green.at(site)) < 4 * max(rse[i, j], 1e-4)


def test_engine_worker_count_invariance():
    probes = [(0, 0), (1, 0)]
    factories = [
        partial(MomentRecorder, probes, (4,)),
        partial(OccupationRecorder, probes, (2, 4)),
    ]
    solo = run_ensemble(_origin(), poisson_unit(2), 4, 600, 17, factories,
                        chunk_size=128, workers=1)
    multi = run_ensemble(_origin(), poisson_unit(2), 4, 600, 17, factories,
                         chunk_size=128, workers=3)
    assert np.array_equal(solo[0].x_sum, multi[0].x_sum)
    assert np.array_equal(solo[0].r_sumsq, multi[0].r_sumsq)
    assert np.array_equal(solo[1].hits, multi[1].hits)
    for n in (2, 4):
        assert np.array_equal(solo[1].snapshots[n], multi[1].snapshots[n])


def test_engine_matches_literal_runner_in_distribution():
    # same process, independent implementations: compare E X_3(0) and
    # E R_3(0) estimates within pooled tolerance
    law = custom_law(2, (0.5, 0, 0.5))
    reps = 30000
    recs = run_ensemble(_origin(), law, 3, reps, 23,
                        [partial(MomentRecorder, [(0, 0)], (3,))])
    mean_eng, se_eng = recs[0].x_mean_se()
    lit = np.empty(reps // 10)
    for i in range(len(lit)):
        traj = brw_run(_origin(), law, 3, master_seed=24, replicate=i)
        lit[i] = traj[3][(0, 0)]
    se_lit = lit.std(ddof=1) / math.sqrt(len(lit))
    gap = abs(mean_eng[3, 0] - lit.mean())
    assert gap < 4 * math.hypot(se_eng[3, 0], se_lit)


def test_power_recorder_second_moment():
    # law with one child always: X_n(x) is Bernoulli(P_n(x)), so
    # E X^2 = E X = P_n(x)
    law = custom_law(2, (0, 1))
    recs = run_ensemble(_origin(), law, 2, 30000, 31,
                        [partial(PowerRecorder, [(0, 0), (1, 1)], (2,))])
    pow2 = recs[0]
    m1, se1 = pow2.moment_mean_se(1)
    m2, se2 = pow2.moment_mean_se(2)
    assert np.allclose(m1, m2)
    exact = {(0, 0): 0.2, (1, 1): 0.08}  # 2-step kernel values in d=2
    for j, site in enumerate(pow2.probes):
        assert abs(m1[0, j] - exact[site]) < 4 * max(se1[0, j], 1e-4)


def test_pairing_recorder_tracks_mass():
    # psi = 1 with scale k pairs to total mass / k
    def ones(pts):
        return np.ones(len(pts))

    k = 4
    recs = run_ensemble(_origin(count=8), poisson_unit(2), 3, 500, 37,
                        [partial(PairingRecorder, ones, k)])
    vals = recs[0].values
    assert vals.shape == (500, 4)
    assert np.allclose(vals[:, 0], 8 / k)
    assert np.all(vals >= 0)
    assert vals[:, 1:].std() > 0


def test_occupation_recorder_counts_positive_generations():
    law = custom_law(2, (0, 1))  # single particle forever
    recs = run_ensemble(_origin(), law, 10, 400, 41,
                        [partial(OccupationRecorder, [(0, 0)], (11,))])
    occ = recs[0]
    # R_11(0) = number of generations 0..10 the walker sat at the origin;
    # hits counts generations 1..10, so they differ by exactly one (gen 0)
    assert np.array_equal(occ.snapshots[11][:, 0], occ.hits[:, 0] + 1)
    assert occ.hits.min() >= 0
    assert occ.hits.max() <= 10


def test_engine_radius_guard():
    with pytest.raises(ValueError):
        run_ensemble(_origin(), poisson_unit(2), 10, 10, 1,
                     [partial(MomentRecorder, [(0, 0)], ())], radius=5)
    with pytest.raises(CapacityError):
        run_ensemble(_origin(3), poisson_unit(3), 10, 10, 1,
                     [partial(MomentRecorder, [(0, 0, 0)], ())], radius=2**21)


def test_engine_explosion_budget():
    with pytest.raises(ExplosionError):
        run_ensemble(_origin(count=50), poisson_unit(2), 20, 64, 1,
                     [partial(MomentRecorder, [(0, 0)], ())],
                     chunk_size=64, particle_budget=400)
