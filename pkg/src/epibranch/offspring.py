"""Offspring laws for the critical branching random walk.

A law describes how one particle at x is replaced by children on the
closed neighborhood {x} union {x +- e_i}.  Three kinds:

* ``poisson_unit``: independent Poisson(1/(2d+1)) counts per target.
  Equivalently (by thinning) a Poisson(1) total placed uniformly.
* ``binomial_envelope``: independent Binomial(N, 1/((2d+1)N)) counts per
  target.  The total is Binomial((2d+1)N, 1/((2d+1)N)) but the placement
  is NOT exchangeable with drawing a total and spreading it uniformly,
  so scalar generating-function recursions do not apply to this law.
* ``custom``: an explicit finite law for the total count, placed
  uniformly at random among the 2d+1 targets.

All moment quantities are exact Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError

_MAX_LOG_PGF_ORDER = 12


@dataclass(frozen=True)
class LogPgfExpansion:
    """Coefficients a_l of log g(1 + w) = sum_{l>=1} a_l w^l.

    ``truncated`` is True when the true series continues past the last
    coefficient reported here.
    """

    coefficients: tuple[Fraction, ...]
    truncated: bool

    def order(self) -> int:
        return len(self.coefficients)

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(a) for a in self.coefficients)


@dataclass(frozen=True)
class OffspringLaw:
    kind: str
    d: int
    village_size: int | None = None
    probabilities: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")

    # -- structure ---------------------------------------------------------

    @property
    def neighborhood_size(self) -> int:
        return 2 * self.d + 1

    @property
    def label(self) -> str:
        if self.kind == "binomial_envelope":
            return f"binomial_envelope(N={self.village_size})"
        if self.kind == "custom":
            return "custom(" + ",".join(str(p) for p in self.probabilities) + ")"
        return self.kind

    @property
    def supports_scalar_recursion(self) -> bool:
        """True when the law equals a total count placed uniformly.

        The per-target binomial law fails this: its joint generating
        function depends on the individual arguments, not only on their
        average, so no scalar pgf describes it.
        """
        return self.kind in ("poisson_unit", "custom")

    @property
    def max_children(self) -> int | None:
        """Largest possible total, or None when unbounded."""
        if self.kind == "custom":
            return len(self.probabilities) - 1
        if self.kind == "binomial_envelope":
            return self.neighborhood_size * self.village_size
        return None

    # -- exact moments -----------------------------------------------------

    def mean_total(self) -> Fraction:
        if self.kind == "custom":
            return sum(
                (Fraction(j) * p for j, p in enumerate(self.probabilities)),
                Fraction(0),
            )
        return Fraction(1)

    def variance_total(self) -> Fraction:
        if self.kind == "poisson_unit":
            return Fraction(1)
        if self.kind == "binomial_envelope":
            m = self.neighborhood_size * self.village_size
            return 1 - Fraction(1, m)
        mean = self.mean_total()
        second = sum(
            (Fraction(j * j) * p for j, p in enumerate(self.probabilities)),
            Fraction(0),
        )
        return second - mean * mean

    def factorial_second_total(self) -> Fraction:
        """E K(K-1) of the total count; the pair-correlation weight."""
        if self.kind == "poisson_unit":
            return Fraction(1)
        if self.kind == "binomial_envelope":
            m = self.neighborhood_size * self.village_size
            return Fraction(m - 1, m)
        return sum(
            (Fraction(j * (j - 1)) * p for j, p in enumerate(self.probabilities)),
            Fraction(0),
        )

    def neighbor_correlation(self) -> tuple[Fraction, Fraction]:
        """(same, different) factorial pair moments of the placed counts.

        same = E xi(e)(xi(e)-1) and different = E xi(e) xi(e') for e != e';
        by symmetry these two numbers determine every pair moment.
        """
        q = self.neighborhood_size
        if self.kind == "binomial_envelope":
            n = self.village_size
            # per-target Binomial(N, 1/(qN)) factorial second moment
            same = Fraction(n * (n - 1), (q * n) ** 2)
            diff = Fraction(1, q * q)
            return same, diff
        w = self.factorial_second_total() / (q * q)
        return w, w

    # -- generating function -----------------------------------------------

    def pgf_total(self, u: float) -> float:
        """g(u) = E u^K of the total count (scalar-recursion laws only)."""
        self._require_scalar()
        if self.kind == "poisson_unit":
            return math.exp(u - 1.0)
        acc = 0.0
        for p in reversed(self.probabilities):
            acc = acc * u + float(p)
        return acc

    def log_pgf_total(self, u: float) -> float:
        self._require_scalar()
        if self.kind == "poisson_unit":
            return u - 1.0
        val = self.pgf_total(u)
        if val <= 0.0:
            raise ValueError(f"pgf non-positive at u={u}")
        return math.log(val)

    def log_pgf_expansion(self, max_order: int = _MAX_LOG_PGF_ORDER) -> LogPgfExpansion:
        """Exact series of log g around 1, in powers of (u - 1)."""
        self._require_scalar()
        if max_order < 1:
            raise ValueError("expansion order must be at least 1")
        if self.kind == "poisson_unit":
            coeffs = (Fraction(1),) + (Fraction(0),) * (max_order - 1)
            return LogPgfExpansion(coefficients=coeffs, truncated=False)
        # g(1 + w) = sum_m b_m w^m with b_m = sum_j p_j C(j, m); b_0 = 1
        b = [Fraction(0)] * (max_order + 1)
        for j, p in enumerate(self.probabilities):
            if p == 0:
                continue
            for m in range(min(j, max_order) + 1):
                b[m] += p * math.comb(j, m)
        if b[0] != 1:
            raise AssertionError("pgf must equal 1 at u=1")
        # log-series recurrence: a_m = b_m - (1/m) sum_{i<m} i a_i b_{m-i}
        a = [Fraction(0)] * (max_order + 1)
        for m in range(1, max_order + 1):
            acc = b[m]
            for i in range(1, m):
                acc -= Fraction(i, m) * a[i] * b[m - i]
            a[m] = acc
        # log of a non-constant polynomial is never a polynomial, so the
        # series terminates only for the law concentrated at zero children
        degenerate = self.probabilities[0] == 1
        return LogPgfExpansion(coefficients=tuple(a[1:]), truncated=not degenerate)

    def _require_scalar(self) -> None:
        if not self.supports_scalar_recursion:
            raise ValueError(
                f"{self.label} places counts independently per target; "
                "it has no total-count generating function to recurse on"
            )

    # -- sampling ------------------------------------------------------------

    def sample_neighbor_counts(
        self, rng: np.random.Generator, parents: np.ndarray
    ) -> np.ndarray:
        """Aggregate children per target for `parents[i]` particles each.

        Returns int64 of shape (len(parents), 2d+1); columns follow the
        canonical move order (hold first, then -e_1, +e_1, ...).  For m
        parents the per-target counts are the m-fold aggregate of the law,
        sampled exactly.
        """
        parents = np.asarray(parents, dtype=np.int64)
        q = self.neighborhood_size
        shape = (parents.shape[0], q)
        if self.kind == "poisson_unit":
            lam = parents[:, None] / q
            return rng.poisson(lam, size=shape).astype(np.int64)
        if self.kind == "binomial_envelope":
            trials = parents[:, None] * self.village_size
            p = 1.0 / (q * self.village_size)
            return rng.binomial(np.broadcast_to(trials, shape), p).astype(np.int64)
        pvals = np.array([float(p) for p in self.probabilities])
        atoms = rng.multinomial(parents, pvals)
        totals = atoms @ np.arange(len(self.probabilities), dtype=np.int64)
        return rng.multinomial(totals, np.full(q, 1.0 / q)).astype(np.int64)


# -- builders ---------------------------------------------------------------


def poisson_unit(d: int) -> OffspringLaw:
    return OffspringLaw(kind="poisson_unit", d=d)


def binomial_envelope(d: int, village_size: int) -> OffspringLaw:
    if village_size < 1:
        raise ConfigError("village size must be at least 1")
    return OffspringLaw(kind="binomial_envelope", d=d, village_size=village_size)


def custom_law(
    d: int,
    probabilities: Sequence,
    *,
    allow_noncritical: bool = False,
) -> OffspringLaw:
    probs = tuple(Fraction(p) for p in probabilities)
    if not probs or any(p < 0 for p in probs):
        raise ConfigError("probabilities must be non-negative")
    if sum(probs) != 1:
        raise ConfigError(f"probabilities sum to {sum(probs)}, not 1")
    law = OffspringLaw(kind="custom", d=d, probabilities=probs)
    if not allow_noncritical and law.mean_total() != 1:
        raise ConfigError(
            f"law has mean {law.mean_total()}; pass allow_noncritical=True to keep it"
        )
    return law
