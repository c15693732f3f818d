import math
import pickle

import numpy as np
import pytest

from epibranch.brw_sim import brw_run
from epibranch.fields import LatticeField, feller_pairing, point_spread_family
from epibranch.lattice_kernel import gaussian_bump
from epibranch.likelihood import (
    GeneratorPsi,
    ImportanceReport,
    SquaredNorm,
    functional_battery,
    importance_battery,
    importance_check,
    log_lr,
    martingale_residual,
)
from epibranch.offspring import poisson_unit
from epibranch.sir_sim import kappa, sir_run


def test_half_factor_anchor():
    # five parents at the origin make lam = 1 there; a full village
    # (used = N) forces both thinning probabilities to one, so the single
    # observed arrival carries factor (1 - 1) + 1 * lam / 2 = 1/2
    mu = LatticeField.single(2, count=5)
    path = [mu, LatticeField.single(2, count=1)]
    bd = log_lr(path, village_size=5)
    assert bd.log_lr == pytest.approx(math.log(0.5), abs=1e-15)
    assert bd.s1 == 0.0  # y == lam exactly
    assert bd.epsilon == pytest.approx(bd.log_lr + bd.s2, abs=0)


def test_empty_path_has_zero_log_lr():
    empty = LatticeField(2)
    bd = log_lr([empty, empty, empty], village_size=10)
    assert bd.log_lr == 0.0
    assert bd.terms == 0


def test_immediate_extinction_closed_form():
    # one ancestor, no offspring: every neighbor sees y = 0; only the
    # origin has used > 0, contributing log(1 + kappa(1) * lam) once
    n_village = 7
    path = [LatticeField.single(2), LatticeField(2)]
    bd = log_lr(path, village_size=n_village)
    want = math.log(1.0 + (1.0 / n_village) * (1.0 / 5.0))
    assert bd.log_lr == pytest.approx(want, abs=1e-15)
    assert bd.terms == 5


def test_orphan_observation_raises():
    path = [LatticeField.single(2), LatticeField.single(2, site=(5, 5))]
    with pytest.raises(ValueError, match="no adjacent parents"):
        log_lr(path, village_size=10)


def test_village_size_validation():
    with pytest.raises(ValueError):
        log_lr([LatticeField.single(2)], village_size=0)


def test_factor_sums_to_one_over_observations():
    # sum_y p(y | lam) factor(y) telescopes to 1: the reweighting is a
    # proper conditional likelihood
    for lam, used, n_village in [(0.4, 3, 7), (1.2, 10, 10), (2.0, 1, 3), (0.2, 5, 5)]:
        total, p = 0.0, math.exp(-lam)
        for y in range(150):
            f = (1 - kappa(y, used, n_village)) + kappa(y + 1, used, n_village) * lam / (y + 1)
            total += p * f
            p *= lam / (y + 1)
        assert total == pytest.approx(1.0, abs=1e-13)


def test_log_lr_accepts_history_objects():
    mu = LatticeField.single(2, count=2)
    hist = sir_run(mu, 9, 4, variant="modified", law=poisson_unit(2), master_seed=3)
    from_obj = log_lr(hist, village_size=9)
    from_fields = log_lr(hist.fields, village_size=9)
    assert from_obj == from_fields


def test_log_lr_bit_reproducible():
    mu = LatticeField.single(2, count=3)
    traj = brw_run(mu, poisson_unit(2), 5, master_seed=11)
    a = log_lr(traj.fields, village_size=6)
    b = log_lr(traj.fields, village_size=6)
    assert a.log_lr == b.log_lr and a.s1 == b.s1 and a.s2 == b.s2


# -- rescaled generator -------------------------------------------------------


def test_generator_on_squared_norm_is_constant():
    pts2 = np.array([[0.0, 0.0], [1.25, -3.5], [10.0, 7.75], [-0.5, 0.25]])
    out2 = GeneratorPsi(SquaredNorm(2), k=16, d=2)(pts2)
    assert np.max(np.abs(out2 - 0.8)) == 0.0
    pts3 = np.array([[0.5, -2.0, 1.0], [0.0, 0.0, 0.0]])
    out3 = GeneratorPsi(SquaredNorm(3), k=64, d=3)(pts3)
    assert np.max(np.abs(out3 - 6.0 / 7.0)) < 1e-13


def test_generator_annihilates_constants():
    class One:
        def __call__(self, x):
            x = np.asarray(x, dtype=np.float64)
            return np.ones(x.shape[:-1])

    pts = np.array([[0.3, -1.0], [4.0, 4.0]])
    assert np.all(GeneratorPsi(One(), k=9, d=2)(pts) == 0.0)


def test_squared_norm_picklable():
    gen = pickle.loads(pickle.dumps(GeneratorPsi(SquaredNorm(2), k=4, d=2)))
    assert gen(np.array([[1.0, 1.0]]))[0] == pytest.approx(0.8, abs=0)


def test_martingale_identity_for_constant_psi():
    # psi == 1 pairs with total mass / k and its generator image vanishes,
    # so the residual is the rescaled mass increment, replicate by replicate
    class One:
        def __call__(self, x):
            x = np.asarray(x, dtype=np.float64)
            return np.ones(x.shape[:-1])

    k, t = 4, 1.0
    law = poisson_unit(2)
    mu = point_spread_family(2).field(k)
    reps = 40
    psi_vals = np.zeros((reps, k + 1))
    gen_vals = np.zeros((reps, k + 1))
    masses = np.zeros((reps, k + 1))
    for r in range(reps):
        traj = brw_run(mu, law, k, master_seed=21, replicate=r)
        for g in range(k + 1):
            psi_vals[r, g] = feller_pairing(traj.fields[g], k, One())
            gen_vals[r, g] = feller_pairing(traj.fields[g], k, GeneratorPsi(One(), k=k, d=2))
            masses[r, g] = traj.fields[g].total_mass()
    res = martingale_residual(psi_vals, gen_vals, k, t)
    want = (masses[:, k] - masses[:, 0]) / k
    assert np.max(np.abs(res - want)) == 0.0


def test_martingale_mean_zero_for_bump():
    k, t = 4, 1.0
    law = poisson_unit(2)
    mu = point_spread_family(2).field(k)
    psi = gaussian_bump(2, radius=2.0)
    gen = GeneratorPsi(psi, k=k, d=2)
    reps = 3000
    psi_vals = np.zeros((reps, k + 1))
    gen_vals = np.zeros((reps, k + 1))
    for r in range(reps):
        traj = brw_run(mu, law, k, master_seed=22, replicate=r)
        for g in range(k + 1):
            psi_vals[r, g] = feller_pairing(traj.fields[g], k, psi)
            gen_vals[r, g] = feller_pairing(traj.fields[g], k, gen)
    res = martingale_residual(psi_vals, gen_vals, k, t)
    se = float(np.std(res, ddof=1) / math.sqrt(reps))
    assert abs(float(np.mean(res))) <= 4.0 * se


def test_martingale_residual_bounds_check():
    vals = np.zeros((3, 5))
    with pytest.raises(ValueError):
        martingale_residual(vals, vals, k=4, t=1.25)


# -- importance consistency -----------------------------------------------------


def test_unit_functional_reweights_to_one():
    mu = LatticeField.single(2, count=2)
    rep = importance_check(lambda fields: 1.0, mu, village_size=6, horizon=3,
                           reps=3000, master_seed=41)
    assert rep.lhs == 1.0 and rep.lhs_se == 0.0
    assert abs(rep.rhs - 1.0) <= 4.0 * rep.rhs_se


def test_importance_battery_consistent():
    mu = LatticeField.single(2, count=3)
    reports = importance_battery(
        functional_battery(3, 2), mu, village_size=8, horizon=3,
        reps=3000, master_seed=42,
    )
    assert [r.name for r in reports] == [
        "unit", "extinct", "occupation_capped", "mass_capped", "hit",
    ]
    for rep in reports:
        assert abs(rep.z) <= 4.0, f"{rep.name}: z={rep.z}"


def test_report_z_degenerate_cases():
    flat = ImportanceReport(name="c", lhs=2.0, lhs_se=0.0, rhs=2.0, rhs_se=0.0, reps=5)
    assert flat.z == 0.0
    split = ImportanceReport(name="c", lhs=2.0, lhs_se=0.0, rhs=3.0, rhs_se=0.0, reps=5)
    assert split.z == math.inf
