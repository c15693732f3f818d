"""Path reweighting between the free walk and the suppressed epidemic.

The suppressed ("modified") dynamics differ from the free Poisson
branching walk in one observable way: at each site and step, one arriving
particle is discarded with probability kappa(arrivals, used, N).  The
conditional law of the observed count y given the parent field is then

    p(y | lam) (1 - kappa(y)) + p(y + 1 | lam) kappa(y + 1),

with p Poisson and lam the stencil average of the parent counts.  The
per-observation likelihood ratio against the free walk divides by
p(y | lam), so log LR sums log[(1 - kappa(y)) + kappa(y+1) lam / (y+1)]
over sites and steps.  Everything here assumes Poisson offspring: the
per-target binomial law has a different conditional likelihood and is not
supported.

Also provided: the discrete-generator action on rescaled test functions
and the martingale residual it induces, plus an importance-sampling
consistency check that reweights free-walk samples and compares them with
direct suppressed-dynamics samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .brw_sim import brw_run
from .fields import LatticeField
from .lattice_kernel import WalkSpec
from .offspring import poisson_unit
from .sir_sim import kappa, sir_run

__all__ = [
    "GeneratorPsi",
    "ImportanceReport",
    "LikelihoodBreakdown",
    "SquaredNorm",
    "functional_battery",
    "importance_check",
    "importance_battery",
    "log_lr",
    "martingale_residual",
]


@dataclass(frozen=True)
class LikelihoodBreakdown:
    """log LR of one path plus the leading terms of its expansion.

    With Delta = (y - lam) / N^alpha and rho = used / N^(1-alpha), the
    factor expands as exp(-Delta rho + ...), so `epsilon` (log_lr + s1 +
    s2) isolates the third-order remainder.
    """

    log_lr: float
    s1: float
    s2: float
    alpha: float
    terms: int

    @property
    def epsilon(self) -> float:
        return self.log_lr + self.s1 + self.s2


def _field_list(history) -> list[LatticeField]:
    fields = getattr(history, "fields", history)
    return list(fields)


def log_lr(history, village_size: int, *, alpha: float = 0.5) -> LikelihoodBreakdown:
    """Log likelihood ratio of the suppressed dynamics against the free walk.

    `history` is a generation-indexed field sequence (or anything with a
    `.fields` attribute); the used count at step t is the occupation
    sum of generations < t, matching the coloring rule of the epidemic.
    Observations with no adjacent parents are impossible under both laws
    and raise.  Log factors accumulate with fsum in sorted site order, so
    the result is bit-reproducible for a given path.
    """
    fields = _field_list(history)
    if village_size < 1:
        raise ValueError("village size must be at least 1")
    if not fields:
        raise ValueError("need at least the initial generation")
    d = fields[0].d
    q = 2 * d + 1
    moves = WalkSpec(d).moves
    used: dict[tuple[int, ...], int] = {}
    for site, cnt in fields[0].items():
        used[site] = cnt
    logs: list[float] = []
    s1_parts: list[float] = []
    s2_parts: list[float] = []
    n_alpha = float(village_size) ** alpha
    n_rest = float(village_size) ** (1.0 - alpha)
    terms = 0
    for t in range(1, len(fields)):
        prev = fields[t - 1]
        obs = fields[t]
        candidates = set(obs.support())
        for site, cnt in prev.items():
            if cnt:
                for mv in moves:
                    candidates.add(tuple(s + m for s, m in zip(site, mv)))
        for x in sorted(candidates):
            lam_int = sum(prev[tuple(c + m for c, m in zip(x, mv))] for mv in moves)
            y = obs[x]
            if lam_int == 0:
                if y > 0:
                    raise ValueError(
                        f"generation {t} has {y} arrivals at {x} with no adjacent parents"
                    )
                continue
            lam = lam_int / q
            r_used = used.get(x, 0)
            k_y = kappa(y, r_used, village_size)
            k_y1 = kappa(y + 1, r_used, village_size)
            factor = (1.0 - k_y) + k_y1 * lam / (y + 1)
            logs.append(math.log(factor))
            delta = (y - lam) / n_alpha
            rho = r_used / n_rest
            s1_parts.append(delta * rho)
            s2_parts.append(0.5 * delta * delta * rho * rho)
            terms += 1
        for site, cnt in obs.items():
            if cnt:
                used[site] = used.get(site, 0) + cnt
    return LikelihoodBreakdown(
        log_lr=math.fsum(logs),
        s1=math.fsum(s1_parts),
        s2=math.fsum(s2_parts),
        alpha=alpha,
        terms=terms,
    )


# -- rescaled generator -------------------------------------------------------


@dataclass(frozen=True)
class SquaredNorm:
    """psi(x) = |x|^2; the generator's exact eigen-dial for the walk."""

    d: int

    def __call__(self, x) -> np.ndarray:
        return np.sum(np.square(np.asarray(x, dtype=np.float64)), axis=-1)


@dataclass(frozen=True)
class GeneratorPsi:
    """Discrete generator of the sqrt(k)-rescaled walk applied to psi.

    (A_k psi)(x) = k/(2d+1) * [ sum_moves psi(x + e/sqrt(k)) - (2d+1) psi(x) ],

    with the hold move included (it cancels).  Instances are plain data
    plus a callable, so they can serve as pairing weights in recorders.
    On psi = |x|^2 the action is the constant 2d/(2d+1), exactly.
    """

    psi: Callable
    k: int
    d: int

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=np.float64)
        q = 2 * self.d + 1
        step = 1.0 / math.sqrt(self.k)
        acc = -q * np.asarray(self.psi(pts), dtype=np.float64)
        for mv in WalkSpec(self.d).moves:
            shift = np.asarray(mv, dtype=np.float64) * step
            acc = acc + np.asarray(self.psi(pts + shift), dtype=np.float64)
        return acc * (self.k / q)


def martingale_residual(
    psi_values: np.ndarray, generator_values: np.ndarray, k: int, t: float
) -> np.ndarray:
    """Per-replicate residual of the rescaled-pairing martingale at time t.

    `psi_values[rep, gen]` and `generator_values[rep, gen]` are the
    rescaled pairings (1/k) sum psi(x / sqrt(k)) X_gen(x) with psi and
    A_k psi; the residual subtracts the initial value and the compensator
    (1/k) sum_{s < kt} of the generator pairing.  Its mean is zero.
    """
    steps = int(math.floor(k * t))
    if steps >= psi_values.shape[1]:
        raise ValueError(f"time {t} needs {steps + 1} generations, have {psi_values.shape[1]}")
    comp = generator_values[:, :steps].sum(axis=1) / k
    return psi_values[:, steps] - psi_values[:, 0] - comp


# -- importance-sampling consistency -----------------------------------------


@dataclass(frozen=True)
class ImportanceReport:
    """Two estimates of one suppressed-dynamics expectation.

    `lhs` samples the suppressed dynamics directly; `rhs` reweights free
    walk samples by exp(log LR).  `z` is their difference over the pooled
    standard error (0 when both sides are constant and equal).
    """

    name: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    reps: int

    @property
    def z(self) -> float:
        pooled = math.hypot(self.lhs_se, self.rhs_se)
        if pooled == 0.0:
            return 0.0 if self.lhs == self.rhs else math.inf
        return (self.lhs - self.rhs) / pooled


def functional_battery(horizon: int, d: int) -> list[tuple[str, Callable]]:
    """Bounded path functionals probing mass, extinction and occupation."""
    origin = (0,) * d

    def unit(fields) -> float:
        return 1.0

    def extinct(fields) -> float:
        return 1.0 if fields[horizon].total_mass() == 0 else 0.0

    def occupation_capped(fields) -> float:
        r = sum(f[origin] for f in fields[:horizon])
        return float(min(r, 10))

    def mass_capped(fields) -> float:
        return float(min(fields[horizon].total_mass(), 20))

    def hit(fields) -> float:
        return 1.0 if any(f[origin] for f in fields[:horizon]) else 0.0

    return [
        ("unit", unit),
        ("extinct", extinct),
        ("occupation_capped", occupation_capped),
        ("mass_capped", mass_capped),
        ("hit", hit),
    ]


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def importance_battery(
    functionals: Sequence[tuple[str, Callable]],
    mu: LatticeField,
    village_size: int,
    horizon: int,
    reps: int,
    master_seed: int,
    *,
    alpha: float = 0.5,
) -> list[ImportanceReport]:
    """Compare suppressed-dynamics sampling with reweighted free sampling.

    Simulates each side once and evaluates every functional on the shared
    paths.  The two sides use domain-separated streams of the same master
    seed, so they are independent.
    """
    law = poisson_unit(mu.d)
    q_vals = {name: np.empty(reps) for name, _ in functionals}
    for r in range(reps):
        hist = sir_run(
            mu, village_size, horizon, variant="modified", law=law,
            master_seed=master_seed, replicate=r,
        )
        for name, fn in functionals:
            q_vals[name][r] = fn(hist.fields)
    p_vals = {name: np.empty(reps) for name, _ in functionals}
    for r in range(reps):
        traj = brw_run(mu, law, horizon, master_seed=master_seed, replicate=r)
        weight = math.exp(log_lr(traj.fields, village_size, alpha=alpha).log_lr)
        for name, fn in functionals:
            p_vals[name][r] = fn(traj.fields) * weight
    out = []
    for name, _ in functionals:
        lhs, lhs_se = _mean_se(q_vals[name])
        rhs, rhs_se = _mean_se(p_vals[name])
        out.append(
            ImportanceReport(
                name=name, lhs=lhs, lhs_se=lhs_se, rhs=rhs, rhs_se=rhs_se, reps=reps
            )
        )
    return out


def importance_check(
    f: Callable,
    mu: LatticeField,
    village_size: int,
    horizon: int,
    reps: int,
    master_seed: int,
    *,
    alpha: float = 0.5,
) -> ImportanceReport:
    """Single-functional form of `importance_battery`."""
    return importance_battery(
        [("f", f)], mu, village_size, horizon, reps, master_seed, alpha=alpha
    )[0]
