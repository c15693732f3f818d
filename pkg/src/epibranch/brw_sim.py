"""Forward simulation of the branching random walk, one replicate at a time.

Each generation, every particle at a site independently produces
children according to the offspring law, and the children land on the
2d+1 neighborhood sites (the site itself and its lattice neighbors).
Particles at the same site are exchangeable, so a site with c parents
draws its (2d+1)-vector of arrivals in one aggregated call.

This module is the readable reference implementation; ensemble-scale
work goes through `engine`, which packs replicates into flat arrays but
must agree with this one in distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExplosionError
from .fields import LatticeField
from .lattice_kernel import WalkSpec
from .offspring import OffspringLaw
from .rng import DOMAIN_BRW, derive

__all__ = ["Trajectory", "brw_step", "brw_run"]

DEFAULT_PARTICLE_BUDGET = 10**8


@dataclass
class Trajectory:
    """A realized path X_0, ..., X_T of generation fields."""

    d: int
    fields: list[LatticeField] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.fields) - 1

    def __getitem__(self, n: int) -> LatticeField:
        return self.fields[n]

    def occupation(self, n: int) -> LatticeField:
        """R_n = X_0 + ... + X_{n-1}: the first n generations.

        Pairs with the n-term Green sum: E R_n = mu * G_n.
        """
        if not 0 <= n <= len(self.fields):
            raise ValueError(f"occupation window {n} outside trajectory")
        out = LatticeField(self.d)
        for gen in self.fields[:n]:
            out = out.added(gen)
        return out

    def window(self, lo: int, hi: int) -> LatticeField:
        """Sum of generations lo..hi inclusive."""
        if not 0 <= lo <= hi <= self.horizon:
            raise ValueError(f"window [{lo}, {hi}] outside trajectory")
        out = LatticeField(self.d)
        for gen in self.fields[lo : hi + 1]:
            out = out.added(gen)
        return out

    def total_masses(self) -> list[int]:
        return [f.total_mass() for f in self.fields]


def brw_step(current: LatticeField, law: OffspringLaw, rng: np.random.Generator) -> LatticeField:
    """One generation of branching: aggregate arrivals per occupied site."""
    if law.d != current.d:
        raise ValueError("offspring law dimension does not match the field")
    coords, counts = current.to_arrays()
    if len(coords) == 0:
        return LatticeField(current.d)
    arrivals = law.sample_neighbor_counts(rng, counts)
    moves = WalkSpec(current.d).moves
    pairs = []
    for j, move in enumerate(moves):
        col = arrivals[:, j]
        live = col > 0
        for row, c in zip(coords[live], col[live]):
            pairs.append((tuple(int(v) + m for v, m in zip(row, move)), int(c)))
    return LatticeField.from_pairs(current.d, pairs)


def brw_run(
    mu: LatticeField,
    law: OffspringLaw,
    horizon: int,
    rng: np.random.Generator | None = None,
    *,
    master_seed: int | None = None,
    replicate: int = 0,
    particle_budget: int = DEFAULT_PARTICLE_BUDGET,
) -> Trajectory:
    """Run one replicate for `horizon` generations from the field mu.

    Pass either an explicit generator or a master seed; with a seed the
    stream is derived per (replicate, generation), so a replicate's path
    does not depend on how many others were run before it.
    """
    if (rng is None) == (master_seed is None):
        raise ValueError("pass exactly one of rng and master_seed")
    traj = Trajectory(mu.d, [mu])
    slots = mu.total_mass()
    current = mu
    for gen in range(horizon):
        step_rng = (
            rng
            if rng is not None
            else derive(master_seed, DOMAIN_BRW, replicate, gen)
        )
        current = brw_step(current, law, step_rng)
        slots += current.total_mass()
        if slots > particle_budget:
            raise ExplosionError(
                f"replicate exceeded particle budget {particle_budget} "
                f"at generation {gen + 1} with {current.total_mass()} particles"
            )
        traj.fields.append(current)
    return traj
