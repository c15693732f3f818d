"""Vectorized ensembles of branching-walk replicates.

A replicate ensemble is packed into one flat int64 array: the key of a
(replicate, site) pair is `rep * codec.size + site_index`, so a whole
generation for a chunk of replicates steps in a handful of numpy calls
(sample arrivals per occupied site, shift keys by precomputed move
offsets, then np.unique + bincount to re-aggregate).

Randomness is drawn from one stream per (chunk, generation), derived
from the master seed and the chunk's global replicate offset.  Streams
never depend on worker scheduling, so results are identical for any
worker count, and chunk results are merged in fixed chunk order.
`chunk_size` is part of the stream layout: changing it changes the
sampled paths (while leaving the distribution alone).

Recorders observe each generation as (rep, site, count) arrays and keep
only what their statistic needs; no global occupation ledger is ever
materialized.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, ExplosionError
from .fields import LatticeField
from .lattice_kernel import WalkSpec
from .offspring import OffspringLaw
from .rng import DOMAIN_BRW, chunk_ranges, derive

__all__ = [
    "SiteCodec",
    "Recorder",
    "MomentRecorder",
    "PowerRecorder",
    "PairingRecorder",
    "OccupationRecorder",
    "run_ensemble",
]

DEFAULT_PARTICLE_BUDGET = 10**8


class SiteCodec:
    """Row-major indexing of the box [-radius, radius]^d."""

    def __init__(self, d: int, radius: int):
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.d = d
        self.radius = radius
        self.side = 2 * radius + 1
        self.size = self.side**d

    def site_index(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        if np.any(np.abs(coords) > self.radius):
            raise ValueError("coordinates outside the codec box")
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        for a in range(self.d):
            idx = idx * self.side + (coords[..., a] + self.radius)
        return idx

    def coords(self, site_idx: np.ndarray) -> np.ndarray:
        site_idx = np.asarray(site_idx, dtype=np.int64)
        out = np.empty(site_idx.shape + (self.d,), dtype=np.int64)
        rem = site_idx
        for a in range(self.d - 1, -1, -1):
            out[..., a] = rem % self.side - self.radius
            rem = rem // self.side
        return out

    def move_offsets(self, moves: Sequence[Sequence[int]]) -> np.ndarray:
        """Index deltas for lattice moves (valid while sites stay interior)."""
        out = np.zeros(len(moves), dtype=np.int64)
        for j, move in enumerate(moves):
            off = 0
            for a in range(self.d):
                off = off * self.side + int(move[a])
            out[j] = off
        return out


# -- recorders ---------------------------------------------------------------


class Recorder:
    """Accumulates one statistic over the generations of a chunk.

    Lifecycle: start() once per chunk, observe() for every generation
    0..horizon in order, finish() when the chunk ends; chunk instances
    are then merged pairwise in fixed chunk order.
    """

    needs_coords = False

    def start(self, creps: int, horizon: int, codec: SiteCodec) -> None:
        raise NotImplementedError

    def observe(self, gen, rep, site_idx, counts, coords=None) -> None:
        raise NotImplementedError

    def finish(self) -> None:
        pass

    def merge(self, other: "Recorder") -> None:
        raise NotImplementedError


def _probe_match(probe_idx: np.ndarray, site_idx: np.ndarray):
    """Positions of site_idx values inside the sorted probe index array."""
    pos = np.searchsorted(probe_idx, site_idx)
    pos[pos == len(probe_idx)] = 0
    hit = probe_idx[pos] == site_idx
    return pos, hit


class MomentRecorder(Recorder):
    """Per-(generation, probe-site) first and second moments of X, plus
    first/second moments of the occupation sum R_n at checkpoint n."""

    def __init__(self, probe_sites: Sequence[Sequence[int]], r_checkpoints: Sequence[int] = ()):
        self.probes = sorted(tuple(int(c) for c in s) for s in probe_sites)
        self.r_checkpoints = tuple(sorted(int(n) for n in r_checkpoints))
        self.reps = 0

    def start(self, creps, horizon, codec):
        if self.r_checkpoints and self.r_checkpoints[-1] > horizon + 1:
            raise ValueError("occupation checkpoint beyond horizon + 1")
        self.reps = creps
        self._probe_idx = codec.site_index(np.array(self.probes, dtype=np.int64))
        p = len(self.probes)
        self.x_sum = np.zeros((horizon + 1, p), dtype=np.float64)
        self.x_sumsq = np.zeros((horizon + 1, p), dtype=np.float64)
        self.r_sum = np.zeros((len(self.r_checkpoints), p), dtype=np.float64)
        self.r_sumsq = np.zeros((len(self.r_checkpoints), p), dtype=np.float64)
        self._r_buf = np.zeros((creps, p), dtype=np.int64)

    def observe(self, gen, rep, site_idx, counts, coords=None):
        if len(site_idx):
            pos, hit = _probe_match(self._probe_idx, site_idx)
            pos, r, c = pos[hit], rep[hit], counts[hit]
            np.add.at(self.x_sum[gen], pos, c.astype(np.float64))
            np.add.at(self.x_sumsq[gen], pos, (c * c).astype(np.float64))
            np.add.at(self._r_buf, (r, pos), c)
        if (gen + 1) in self.r_checkpoints:
            at = self.r_checkpoints.index(gen + 1)
            buf = self._r_buf.astype(np.float64)
            self.r_sum[at] += buf.sum(axis=0)
            self.r_sumsq[at] += (buf * buf).sum(axis=0)

    def finish(self):
        del self._r_buf
        self._probe_idx = None

    def merge(self, other):
        self.reps += other.reps
        self.x_sum += other.x_sum
        self.x_sumsq += other.x_sumsq
        self.r_sum += other.r_sum
        self.r_sumsq += other.r_sumsq

    # -- estimates ---------------------------------------------------------

    def _mean_se(self, total, total_sq):
        mean = total / self.reps
        var = (total_sq / self.reps - mean**2) * self.reps / (self.reps - 1)
        se = np.sqrt(np.maximum(var, 0.0) / self.reps)
        return mean, se

    def x_mean_se(self):
        """(mean, se) arrays of X_gen(probe), shape (horizon+1, probes)."""
        return self._mean_se(self.x_sum, self.x_sumsq)

    def r_mean_se(self):
        """(mean, se) arrays of R_n(probe) at the checkpoints."""
        return self._mean_se(self.r_sum, self.r_sumsq)


class PowerRecorder(Recorder):
    """Per-(generation, probe) moments of X and X^2 with exact SEs.

    Tracks sums of X, X^2, X^3, X^4 so both the mean of X and the mean
    of X^2 come with correct standard errors.
    """

    def __init__(self, probe_sites: Sequence[Sequence[int]], gens: Sequence[int]):
        self.probes = sorted(tuple(int(c) for c in s) for s in probe_sites)
        self.gens = tuple(sorted(int(g) for g in gens))
        self.reps = 0

    def start(self, creps, horizon, codec):
        if self.gens and self.gens[-1] > horizon:
            raise ValueError("recorded generation beyond horizon")
        self.reps = creps
        self._probe_idx = codec.site_index(np.array(self.probes, dtype=np.int64))
        shape = (len(self.gens), len(self.probes))
        self.sums = np.zeros((4,) + shape, dtype=np.float64)

    def observe(self, gen, rep, site_idx, counts, coords=None):
        if gen not in self.gens or not len(site_idx):
            return
        at = self.gens.index(gen)
        pos, hit = _probe_match(self._probe_idx, site_idx)
        pos, c = pos[hit], counts[hit].astype(np.float64)
        p = c.copy()
        for power in range(4):
            np.add.at(self.sums[power, at], pos, p)
            p = p * c

    def finish(self):
        self._probe_idx = None

    def merge(self, other):
        self.reps += other.reps
        self.sums += other.sums

    def moment_mean_se(self, power: int):
        """(mean, se) of the sample mean of X^power (power 1 or 2)."""
        n = self.reps
        mean = self.sums[power - 1] / n
        second = self.sums[2 * power - 1] / n
        var = (second - mean**2) * n / (n - 1)
        return mean, np.sqrt(np.maximum(var, 0.0) / n)


class PairingRecorder(Recorder):
    """Per-replicate rescaled pairings (1/k) sum_x X_gen(x) psi(x/sqrt(k)).

    psi_vec maps a float array of shape (m, d) to (m,) values; it sees
    the already-rescaled coordinates.  Keeps the raw per-replicate series
    over the recorded generations, concatenated across chunks.
    """

    needs_coords = True

    def __init__(self, psi_vec: Callable, scale_k: int, gens: Sequence[int] | None = None):
        self.psi_vec = psi_vec
        self.scale_k = int(scale_k)
        self.gens = None if gens is None else tuple(sorted(int(g) for g in gens))
        self.values: np.ndarray | None = None

    def start(self, creps, horizon, codec):
        if self.gens is None:
            self.gens = tuple(range(horizon + 1))
        if self.gens[-1] > horizon:
            raise ValueError("recorded generation beyond horizon")
        self._buf = np.zeros((creps, len(self.gens)), dtype=np.float64)

    def observe(self, gen, rep, site_idx, counts, coords=None):
        if gen not in self.gens or not len(site_idx):
            return
        at = self.gens.index(gen)
        root = math.sqrt(self.scale_k)
        vals = self.psi_vec(coords.astype(np.float64) / root) * counts
        np.add.at(self._buf[:, at], rep, vals / self.scale_k)

    def finish(self):
        self.values = self._buf
        del self._buf

    def merge(self, other):
        self.values = np.vstack([self.values, other.values])


class OccupationRecorder(Recorder):
    """Per-replicate occupation sums and positive-generation counts.

    Tracks, at each probe site, the running sum R_n = sum_{i<n} X_i with
    per-replicate snapshots at the checkpoint values of n, and the count
    of generations m in [first_gen, horizon] with X_m(probe) > 0.
    """

    def __init__(
        self,
        probe_sites: Sequence[Sequence[int]],
        checkpoints: Sequence[int],
        first_gen: int = 1,
    ):
        self.probes = sorted(tuple(int(c) for c in s) for s in probe_sites)
        self.checkpoints = tuple(sorted(int(n) for n in checkpoints))
        self.first_gen = int(first_gen)
        self.snapshots: dict[int, np.ndarray] = {}
        self.hits: np.ndarray | None = None

    def start(self, creps, horizon, codec):
        if self.checkpoints and self.checkpoints[-1] > horizon + 1:
            raise ValueError("occupation checkpoint beyond horizon + 1")
        self._probe_idx = codec.site_index(np.array(self.probes, dtype=np.int64))
        p = len(self.probes)
        self._r_buf = np.zeros((creps, p), dtype=np.int64)
        self._hits = np.zeros((creps, p), dtype=np.int64)
        self._snaps: dict[int, np.ndarray] = {}

    def observe(self, gen, rep, site_idx, counts, coords=None):
        if len(site_idx):
            pos, hit = _probe_match(self._probe_idx, site_idx)
            pos, r, c = pos[hit], rep[hit], counts[hit]
            np.add.at(self._r_buf, (r, pos), c)
            if gen >= self.first_gen:
                np.add.at(self._hits, (r, pos), (c > 0).astype(np.int64))
        if (gen + 1) in self.checkpoints:
            self._snaps[gen + 1] = self._r_buf.copy()

    def finish(self):
        self.snapshots = self._snaps
        self.hits = self._hits
        del self._r_buf, self._hits, self._snaps
        self._probe_idx = None

    def merge(self, other):
        self.hits = np.vstack([self.hits, other.hits])
        for n in self.checkpoints:
            self.snapshots[n] = np.vstack([self.snapshots[n], other.snapshots[n]])


# -- ensemble driver ----------------------------------------------------------


def _run_chunk(
    chunk: tuple[int, int],
    mu_arrays,
    law: OffspringLaw,
    horizon: int,
    codec: SiteCodec,
    factories,
    master_seed: int,
    domain: int,
    budget: int,
):
    lo, hi = chunk
    creps = hi - lo
    mu_coords, mu_counts = mu_arrays
    site0 = codec.site_index(mu_coords)
    keys = (np.arange(creps, dtype=np.int64)[:, None] * codec.size + site0[None, :]).reshape(-1)
    counts = np.tile(mu_counts, creps)

    recorders = [factory() for factory in factories]
    for rec in recorders:
        rec.start(creps, horizon, codec)
    needs_coords = any(rec.needs_coords for rec in recorders)
    offsets = codec.move_offsets(WalkSpec(codec.d).moves)

    def tell(gen, keys, counts):
        rep = keys // codec.size
        site = keys % codec.size
        coords = codec.coords(site) if needs_coords else None
        for rec in recorders:
            rec.observe(gen, rep, site, counts, coords)

    slots = int(counts.sum())
    tell(0, keys, counts)
    for gen in range(1, horizon + 1):
        if len(keys):
            rng = derive(master_seed, domain, lo, gen)
            arrivals = law.sample_neighbor_counts(rng, counts)
            parts, weights = [], []
            for j in range(arrivals.shape[1]):
                col = arrivals[:, j]
                live = col > 0
                if live.any():
                    parts.append(keys[live] + offsets[j])
                    weights.append(col[live])
            if parts:
                cat = np.concatenate(parts)
                wcat = np.concatenate(weights)
                keys, inverse = np.unique(cat, return_inverse=True)
                counts = np.bincount(inverse, weights=wcat.astype(np.float64)).astype(np.int64)
            else:
                keys = keys[:0]
                counts = counts[:0]
            slots += int(counts.sum())
            if slots > budget:
                raise ExplosionError(
                    f"chunk [{lo}, {hi}) exceeded its particle budget {budget} "
                    f"at generation {gen}"
                )
        tell(gen, keys, counts)
    for rec in recorders:
        rec.finish()
    return recorders


def run_ensemble(
    mu: LatticeField,
    law: OffspringLaw,
    horizon: int,
    reps: int,
    master_seed: int,
    recorder_factories: Sequence[Callable[[], Recorder]],
    *,
    chunk_size: int = 1024,
    workers: int = 1,
    domain: int = DOMAIN_BRW,
    particle_budget: int = DEFAULT_PARTICLE_BUDGET,
    radius: int | None = None,
) -> list[Recorder]:
    """Simulate `reps` replicates and return the merged recorders.

    The walk grows its support by at most one site per generation, so
    the default codec radius (initial support + horizon) is exact; pass
    `radius` only to enlarge it for probe bookkeeping.
    """
    if law.d != mu.d:
        raise ValueError("offspring law dimension does not match the field")
    if reps <= 0:
        raise ValueError("reps must be positive")
    coords, mu_counts = mu.to_arrays()
    if len(coords) == 0:
        raise ValueError("initial field is empty")
    reach = int(np.max(np.abs(coords))) + horizon
    if radius is None:
        radius = reach
    elif radius < reach:
        raise ValueError(f"radius {radius} cannot contain the walk (needs {reach})")
    codec = SiteCodec(mu.d, radius)
    if codec.size > 2**62 // max(chunk_size, 1):
        raise CapacityError("codec box too large for packed replicate keys")

    chunks = chunk_ranges(reps, chunk_size)
    merged: list[Recorder] | None = None

    def budget_for(lo, hi):
        return max(1, particle_budget * (hi - lo) // reps)

    if workers <= 1:
        for lo, hi in chunks:
            part = _run_chunk(
                (lo, hi), (coords, mu_counts), law, horizon, codec,
                recorder_factories, master_seed, domain, budget_for(lo, hi),
            )
            if merged is None:
                merged = part
            else:
                for base, extra in zip(merged, part):
                    base.merge(extra)
        return merged

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _run_chunk,
                (lo, hi), (coords, mu_counts), law, horizon, codec,
                recorder_factories, master_seed, domain, budget_for(lo, hi),
            )
            for lo, hi in chunks
        ]
        for future in futures:
            part = future.result()
            if merged is None:
                merged = part
            else:
                for base, extra in zip(merged, part):
                    base.merge(extra)
    return merged
