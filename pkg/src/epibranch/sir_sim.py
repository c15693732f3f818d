"""Village SIR epidemics on the lattice, and their branching envelope.

Each site hosts a village of `village_size` individuals.  Infected
individuals recover after one step; infection attempts ("arrivals") at
a site are generated from the infected counts on the 2d+1 neighborhood
by the offspring law, exactly as in the branching walk.  The two
epidemic variants differ in how arrivals are thinned:

* standard: every arrival picks a uniform individual in the target
  village.  Picks of already-used individuals (recovered, currently or
  initially infected) fail ("errant"); several arrivals picking the
  same fresh individual yield one new infection and the rest fail
  ("collisions").  Individuals are exchangeable, so the state keeps
  only the used count per site and relabels: a uniform pick below the
  used count is errant, and fresh-pick multiplicities come from one
  batch of uniform draws.  This is distribution-exact.

* modified: arrivals succeed, except that with probability
  kappa(arrivals, used, village_size) = min(arrivals * used / size, 1)
  a single arrival is discarded.  No per-individual bookkeeping, so
  the used count may exceed the village; this is the variant whose
  likelihood ratio against the free branching walk is tractable.

The used count at the moment arrivals land equals the recovered field
one step later: recovered_{t+1} = recovered_t + infected_t.

`coupled_run` drives the free envelope walk and both epidemics on
shared arrival randomness, splitting each site's parents into the
common group, the surplus group of whichever epidemic has more
infected, and the envelope-only remainder.  Arrival vectors are
additive over parent groups for every law, so the envelope dominates
both epidemics pathwise; thinning coins are fresh per variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError
from .fields import LatticeField
from .lattice_kernel import WalkSpec
from .offspring import OffspringLaw, binomial_envelope
from .rng import DOMAIN_COUPLED, DOMAIN_SIR_MODIFIED, DOMAIN_SIR_STANDARD, derive

__all__ = [
    "kappa",
    "StepStats",
    "EpidemicHistory",
    "CoupledReport",
    "sir_run",
    "coupled_run",
]


def kappa(arrivals: int, used: int, village_size: int) -> float:
    """Discard probability of the modified epidemic: min(y*u/size, 1)."""
    if arrivals < 0 or used < 0:
        raise ValueError("counts must be nonnegative")
    if village_size < 1:
        raise ValueError("village size must be at least 1")
    return min(arrivals * used / village_size, 1.0)


@dataclass
class StepStats:
    """Thinning tallies for one epidemic step."""

    collisions: int = 0  # fresh-pick multiplicity losers (standard)
    errant: int = 0  # picks of already-used individuals (standard)
    friction: int = 0  # sum over sites of collisions + (errant - 1)_+
    discarded: int = 0  # kappa discards (modified)


@dataclass
class EpidemicHistory:
    """Infected fields X_0..X_T with per-step thinning tallies."""

    d: int
    village_size: int
    variant: str
    fields: list[LatticeField] = field(default_factory=list)
    stats: list[StepStats] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.fields) - 1

    def __getitem__(self, t: int) -> LatticeField:
        return self.fields[t]

    def recovered(self, t: int) -> LatticeField:
        """R_t = X_0 + ... + X_{t-1}."""
        out = LatticeField(self.d)
        for gen in self.fields[:t]:
            out = out.added(gen)
        return out

    def total_masses(self) -> list[int]:
        return [f.total_mass() for f in self.fields]


def _arrival_totals(
    infected: LatticeField, law: OffspringLaw, rng: np.random.Generator
) -> dict[tuple[int, ...], int]:
    """Arrival counts per target site from one generation of spreading."""
    coords, counts = infected.to_arrays()
    if len(coords) == 0:
        return {}
    arrivals = law.sample_neighbor_counts(rng, counts)
    moves = WalkSpec(infected.d).moves
    totals: dict[tuple[int, ...], int] = {}
    for j, move in enumerate(moves):
        col = arrivals[:, j]
        for row, c in zip(coords[col > 0], col[col > 0]):
            site = tuple(int(v) + m for v, m in zip(row, move))
            totals[site] = totals.get(site, 0) + int(c)
    return totals


def _color_standard(
    raw: int, used: int, village_size: int, rng: np.random.Generator
) -> tuple[int, int, int]:
    """(new infections, collisions, errant) for one site's arrivals.

    Individuals are exchangeable, so relabel the used ones to the range
    below `used`: a uniform pick there is errant, and distinct fresh
    picks win one infection each.
    """
    picks = rng.integers(0, village_size, size=raw)
    fresh = picks[picks >= used]
    errant = raw - len(fresh)
    winners = len(np.unique(fresh))
    return winners, len(fresh) - winners, errant


def _step(
    infected: LatticeField,
    used: dict[tuple[int, ...], int],
    law: OffspringLaw,
    village_size: int,
    variant: str,
    rng: np.random.Generator,
) -> tuple[LatticeField, StepStats]:
    """Advance one epidemic step in place (used is updated)."""
    totals = _arrival_totals(infected, law, rng)
    stats = StepStats()
    new_pairs = []
    for site in sorted(totals):
        raw = totals[site]
        u = used.get(site, 0)
        if variant == "standard":
            won, coll, err = _color_standard(raw, u, village_size, rng)
            stats.collisions += coll
            stats.errant += err
            stats.friction += coll + max(err - 1, 0)
            if won:
                new_pairs.append((site, won))
                used[site] = u + won
                if used[site] > village_size:
                    raise CapacityError(
                        f"site {site} used {used[site]} of {village_size}"
                    )
        else:
            drop = int(rng.random() < kappa(raw, u, village_size))
            stats.discarded += drop
            won = raw - drop
            if won:
                new_pairs.append((site, won))
                used[site] = u + won
    return LatticeField.from_pairs(infected.d, new_pairs), stats


def _initial_used(mu: LatticeField, village_size: int, variant: str) -> dict:
    used = {}
    for site, c in mu.items():
        if variant == "standard" and c > village_size:
            raise CapacityError(
                f"initial infected {c} at {site} exceed village size {village_size}"
            )
        used[site] = c
    return used


def sir_run(
    mu: LatticeField,
    village_size: int,
    horizon: int,
    *,
    variant: str = "standard",
    law: OffspringLaw | None = None,
    master_seed: int | None = None,
    rng: np.random.Generator | None = None,
    replicate: int = 0,
) -> EpidemicHistory:
    """Run one epidemic replicate for `horizon` steps from the field mu.

    The arrival law defaults to the envelope binomial; the modified
    variant is usually paired with the unit Poisson law instead, which
    is the only law its likelihood ratio is defined for.
    """
    if variant not in ("standard", "modified"):
        raise ValueError(f"unknown variant {variant!r}")
    if (rng is None) == (master_seed is None):
        raise ValueError("pass exactly one of rng and master_seed")
    if law is None:
        law = binomial_envelope(mu.d, village_size)
    if law.d != mu.d:
        raise ValueError("offspring law dimension does not match the field")
    domain = DOMAIN_SIR_STANDARD if variant == "standard" else DOMAIN_SIR_MODIFIED
    used = _initial_used(mu, village_size, variant)
    hist = EpidemicHistory(mu.d, village_size, variant, [mu])
    current = mu
    for t in range(horizon):
        step_rng = (
            rng if rng is not None else derive(master_seed, domain, replicate, t)
        )
        current, stats = _step(current, used, law, village_size, variant, step_rng)
        hist.fields.append(current)
        hist.stats.append(stats)
    return hist


@dataclass
class CoupledReport:
    """Envelope walk and both epidemics driven by shared arrivals."""

    d: int
    village_size: int
    envelope: list[LatticeField]
    standard: list[LatticeField]
    modified: list[LatticeField]
    collisions: int
    errant: int
    friction: int
    discarded: int
    max_discrepancy: int  # max over (t, x) of |standard - modified|

    @property
    def horizon(self) -> int:
        return len(self.envelope) - 1

    def dominated(self) -> bool:
        """Envelope >= each epidemic at every site and time."""
        for fields in (self.standard, self.modified):
            for env, epi in zip(self.envelope, fields):
                for site, c in epi.items():
                    if c > env[site]:
                        return False
        return True


def coupled_run(
    mu: LatticeField,
    village_size: int,
    horizon: int,
    *,
    law: OffspringLaw | None = None,
    master_seed: int | None = None,
    rng: np.random.Generator | None = None,
    replicate: int = 0,
) -> CoupledReport:
    """Envelope walk + standard and modified epidemics, coupled.

    Per site, parents are split into min(standard, modified) common
    parents, the surplus of the larger epidemic, and the envelope-only
    remainder; each group draws one arrival vector, and every process
    sums the groups it contains.  Thinning uses fresh randomness per
    variant, drawn in sorted site order.
    """
    if (rng is None) == (master_seed is None):
        raise ValueError("pass exactly one of rng and master_seed")
    if law is None:
        law = binomial_envelope(mu.d, village_size)
    d = mu.d
    moves = WalkSpec(d).moves
    env = [mu]
    std = [mu]
    mod = [mu]
    used_s = _initial_used(mu, village_size, "standard")
    used_m = _initial_used(mu, village_size, "modified")
    tallies = StepStats()
    max_disc = 0
    for t in range(horizon):
        step_rng = (
            rng
            if rng is not None
            else derive(master_seed, DOMAIN_COUPLED, replicate, t)
        )
        sites = sorted(env[-1].support())
        lows, mids, rests = [], [], []
        for site in sites:
            ys, ym, x = std[-1][site], mod[-1][site], env[-1][site]
            lo = min(ys, ym)
            hi = max(ys, ym)
            lows.append(lo)
            mids.append(hi - lo)
            rests.append(x - hi)
        groups = []
        for counts in (lows, mids, rests):
            arr = np.asarray(counts, dtype=np.int64)
            if arr.sum() > 0:
                groups.append(law.sample_neighbor_counts(step_rng, arr))
            else:
                groups.append(np.zeros((len(sites), len(moves)), dtype=np.int64))
        v1, v2, v3 = groups
        env_tot: dict = {}
        std_tot: dict = {}
        mod_tot: dict = {}
        for i, site in enumerate(sites):
            ys, ym = std[-1][site], mod[-1][site]
            for j, move in enumerate(moves):
                target = tuple(c + m for c, m in zip(site, move))
                e = int(v1[i, j] + v2[i, j] + v3[i, j])
                if e:
                    env_tot[target] = env_tot.get(target, 0) + e
                s = int(v1[i, j]) + (int(v2[i, j]) if ys > ym else 0)
                if s:
                    std_tot[target] = std_tot.get(target, 0) + s
                m_ = int(v1[i, j]) + (int(v2[i, j]) if ym > ys else 0)
                if m_:
                    mod_tot[target] = mod_tot.get(target, 0) + m_
        env.append(LatticeField.from_pairs(d, list(env_tot.items())))
        # standard coloring, then modified thinning, fresh coins each
        std_pairs = []
        for site in sorted(std_tot):
            raw = std_tot[site]
            won, coll, err = _color_standard(
                raw, used_s.get(site, 0), village_size, step_rng
            )
            tallies.collisions += coll
            tallies.errant += err
            tallies.friction += coll + max(err - 1, 0)
            if won:
                std_pairs.append((site, won))
                used_s[site] = used_s.get(site, 0) + won
                if used_s[site] > village_size:
                    raise CapacityError(
                        f"site {site} used {used_s[site]} of {village_size}"
                    )
        std.append(LatticeField.from_pairs(d, std_pairs))
        mod_pairs = []
        for site in sorted(mod_tot):
            raw = mod_tot[site]
            drop = int(
                step_rng.random() < kappa(raw, used_m.get(site, 0), village_size)
            )
            tallies.discarded += drop
            if raw - drop:
                mod_pairs.append((site, raw - drop))
                used_m[site] = used_m.get(site, 0) + (raw - drop)
        mod.append(LatticeField.from_pairs(d, mod_pairs))
        for site in set(std[-1].support()) | set(mod[-1].support()):
            max_disc = max(max_disc, abs(std[-1][site] - mod[-1][site]))
        for fields in (std, mod):
            for site, c in fields[-1].items():
                if c > env[-1][site]:
                    raise AssertionError("envelope domination violated")
    return CoupledReport(
        d,
        village_size,
        env,
        std,
        mod,
        tallies.collisions,
        tallies.errant,
        tallies.friction,
        tallies.discarded,
        max_disc,
    )
