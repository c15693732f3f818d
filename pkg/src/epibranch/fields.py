"""Sparse particle fields and the initial-configuration families.

A LatticeField is a non-negative integer-valued function with finite
support on Z^d.  The families below produce sequences mu^k of initial
fields with total mass of order k whose expected occupation stays flat
after short times; `validate_spread` measures that flatness exactly
through the Green table.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import HorizonError
from .lattice_kernel import BoxFunction, KernelTable, green_convolve


class LatticeField:
    """Finite non-negative integer-valued field on Z^d."""

    __slots__ = ("d", "_sites")

    def __init__(self, d: int, sites: Mapping[tuple[int, ...], int] | None = None):
        if d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        self.d = d
        self._sites: dict[tuple[int, ...], int] = {}
        if sites:
            for site, count in sites.items():
                self._set(site, count)

    def _set(self, site: Sequence[int], count: int) -> None:
        site = tuple(int(c) for c in site)
        if len(site) != self.d:
            raise ValueError(f"site {site} has wrong dimension")
        count = int(count)
        if count < 0:
            raise ValueError(f"negative count at {site}")
        if count > 0:
            self._sites[site] = count

    @classmethod
    def from_pairs(cls, d: int, pairs: Iterable[tuple[Sequence[int], int]]) -> "LatticeField":
        out = cls(d)
        for site, count in pairs:
            site = tuple(int(c) for c in site)
            if count:
                out._sites[site] = out._sites.get(site, 0) + int(count)
                if out._sites[site] < 0:
                    raise ValueError(f"negative count at {site}")
                if out._sites[site] == 0:
                    del out._sites[site]
        return out

    @classmethod
    def single(cls, d: int, site: Sequence[int] | None = None, count: int = 1) -> "LatticeField":
        site = tuple(site) if site is not None else (0,) * d
        return cls(d, {site: count})

    @classmethod
    def from_arrays(cls, coords: np.ndarray, counts: np.ndarray) -> "LatticeField":
        coords = np.asarray(coords)
        out = cls(int(coords.shape[1]))
        for row, c in zip(coords, np.asarray(counts)):
            if c:
                out._set(tuple(int(v) for v in row), int(c))
        return out

    # -- queries ---------------------------------------------------------

    def __getitem__(self, site: Sequence[int]) -> int:
        return self._sites.get(tuple(int(c) for c in site), 0)

    def __len__(self) -> int:
        return len(self._sites)

    def __bool__(self) -> bool:
        return bool(self._sites)

    def __eq__(self, other) -> bool:
        return isinstance(other, LatticeField) and self.d == other.d and self._sites == other._sites

    def __hash__(self):
        return hash((self.d, tuple(sorted(self._sites.items()))))

    def items(self) -> Iterator[tuple[tuple[int, ...], int]]:
        """(site, count) pairs in sorted site order."""
        return iter(sorted(self._sites.items()))

    def support(self) -> list[tuple[int, ...]]:
        return sorted(self._sites)

    def total_mass(self) -> int:
        return sum(self._sites.values())

    def max_count(self) -> int:
        return max(self._sites.values(), default=0)

    def support_radius(self) -> float:
        """Largest Euclidean norm over the support (0 for the empty field)."""
        if not self._sites:
            return 0.0
        return max(math.sqrt(sum(c * c for c in site)) for site in self._sites)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (coords, counts) arrays; coords shape (n, d), int64."""
        if not self._sites:
            return np.zeros((0, self.d), dtype=np.int64), np.zeros(0, dtype=np.int64)
        items = sorted(self._sites.items())
        coords = np.array([s for s, _ in items], dtype=np.int64)
        counts = np.array([c for _, c in items], dtype=np.int64)
        return coords, counts

    # -- arithmetic ------------------------------------------------------

    def added(self, other: "LatticeField") -> "LatticeField":
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        out = LatticeField(self.d, self._sites)
        for site, count in other._sites.items():
            new = out._sites.get(site, 0) + count
            out._sites[site] = new
        return out

    # -- serialization ---------------------------------------------------

    def to_csv(self) -> str:
        """Sorted CSV with header x,y[,z],count."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list("xyz"[: self.d]) + ["count"])
        for site, count in self.items():
            writer.writerow(list(site) + [count])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LatticeField":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty field CSV")
        header = rows[0]
        d = len(header) - 1
        if header != list("xyz"[:d]) + ["count"]:
            raise ValueError(f"unexpected field CSV header {header!r}")
        out = cls(d)
        for row in rows[1:]:
            if not row:
                continue
            out._set([int(v) for v in row[:d]], int(row[d]))
        return out


def feller_pairing(field: LatticeField | Mapping, k: int, psi: Callable) -> float:
    """<psi, F_k mu> = (1/k) sum_x mu(x) psi(x / sqrt(k)).

    The mass-space rescaling sends each particle at x to mass 1/k at
    x / sqrt(k); the pairing evaluates psi there.
    """
    if k <= 0:
        raise ValueError("scale k must be positive")
    items = field.items() if hasattr(field, "items") else field
    items = list(items)
    if not items:
        return 0.0
    coords = np.array([s for s, _ in items], dtype=np.float64)
    counts = np.array([c for _, c in items], dtype=np.float64)
    vals = np.asarray(psi(coords / math.sqrt(k)), dtype=np.float64)
    return float(np.dot(counts, vals) / k)


# -- initial configuration families ---------------------------------------


@dataclass(frozen=True)
class InitialConfigFamily:
    """A family k -> mu^k of initial fields with declared growth constants.

    mass_bounds = (c1, c2) certify c1*k <= |mu^k| <= c2*k; support_factor A
    certifies supp(mu^k) within the ball of radius A*sqrt(k); spread_target
    is the flatness level the family promises at small times (used by
    `validate_spread`).
    """

    kind: str
    d: int
    params: dict
    mass_bounds: tuple[float, float]
    support_factor: float
    spread_target: float
    generator: Callable[[int], LatticeField]

    def field(self, k: int) -> LatticeField:
        if k <= 0:
            raise ValueError("family scale k must be positive")
        return self.generator(k)


def _disk_sites(d: int, need: int) -> list[tuple[int, ...]]:
    """The `need` lattice sites closest to the origin (ties broken lex)."""
    r = 1
    while True:
        rng = range(-r, r + 1)
        sites = [s for s in np.ndindex(*(2 * r + 1,) * d)]
        coords = [tuple(c - r for c in s) for s in sites]
        coords.sort(key=lambda s: (sum(c * c for c in s), s))
        if len(coords) >= need and sum(c * c for c in coords[need - 1]) <= r * r:
            return coords[:need]
        r *= 2


def point_spread_family(d: int = 2, *, per_site_cap: int = 1) -> InitialConfigFamily:
    """k particles spread with at most `per_site_cap` per site in a disk.

    Two dimensions only: a unit-density disk of k sites has radius of
    order sqrt(k) exactly when d = 2.  In three dimensions the same
    packing concentrates into radius k^(1/3) and the rescaled occupation
    peak grows like k^(1/6); use `ball_bounded_family` there.
    """
    if d != 2:
        raise ValueError("point_spread is a planar family; use ball_bounded for d=3")
    if per_site_cap < 1:
        raise ValueError("per-site cap must be at least 1")

    def gen(k: int) -> LatticeField:
        full, rem = divmod(k, per_site_cap)
        sites = _disk_sites(d, full + (1 if rem else 0))
        field = LatticeField(d)
        for i, site in enumerate(sites):
            field._set(site, per_site_cap if i < full else rem)
        return field

    # a disk of m unit-density sites has radius <= sqrt(m / pi) + 1
    support = 2.0 / math.sqrt(math.pi) + 2.0
    return InitialConfigFamily(
        kind="point_spread",
        d=d,
        params={"per_site_cap": per_site_cap},
        mass_bounds=(1.0, 1.0),
        support_factor=support,
        spread_target=2.0,
        generator=gen,
    )


def ball_bounded_family(*, c1: float = 1.0, c2: int = 8) -> InitialConfigFamily:
    """d=3 family: at most c2 particles in any ball of radius 3*c1*k^(1/6).

    Particles sit on a sublattice with spacing exceeding the ball diameter,
    so any such ball catches at most 2^3 = 8 sublattice points.
    """
    if c2 < 8:
        raise ValueError("the sublattice construction needs c2 >= 8")

    def gen(k: int) -> LatticeField:
        rho = 3.0 * c1 * k ** (1.0 / 6.0)
        gap = 2 * math.ceil(rho) + 1
        m = 1
        while True:
            pts = []
            for idx in np.ndindex(2 * m + 1, 2 * m + 1, 2 * m + 1):
                site = tuple((i - m) * gap for i in idx)
                pts.append(site)
            pts.sort(key=lambda s: (sum(c * c for c in s), s))
            if len(pts) >= k:
                return LatticeField(3, {site: 1 for site in pts[:k]})
            m += 1

    # k points with spacing ~ 6*c1*k^(1/6) live inside radius
    # ~ gap * (3k/(4pi))^(1/3) ~ 4.4 * c1 * sqrt(k)
    return InitialConfigFamily(
        kind="ball_bounded",
        d=3,
        params={"c1": c1, "c2": c2},
        mass_bounds=(1.0, 1.0),
        support_factor=8.0 * c1 + 3.0,
        spread_target=2.0,
        generator=gen,
    )


def radial_spike_family(*, alpha: float = 1.0, coefficient: float = 1.0) -> InitialConfigFamily:
    """d=2 family mu^k(y) = floor(C * (k/(|y|^2+1))^(alpha/2)).

    Radially non-increasing with an integrable singularity profile; total
    mass is of order k for alpha in (0, 2).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    if coefficient <= 0:
        raise ValueError("coefficient must be positive")

    def profile(k: int, sq: np.ndarray) -> np.ndarray:
        return np.floor(coefficient * (k / (sq + 1.0)) ** (alpha / 2.0)).astype(np.int64)

    def gen(k: int) -> LatticeField:
        # support ends where the profile drops below 1
        rmax = math.isqrt(int(coefficient ** (2.0 / alpha) * k)) + 1
        axes = np.arange(-rmax, rmax + 1)
        xx, yy = np.meshgrid(axes, axes, indexing="ij")
        counts = profile(k, (xx * xx + yy * yy).astype(np.float64))
        field = LatticeField(2)
        for i, j in np.argwhere(counts > 0):
            field._set((int(axes[i]), int(axes[j])), int(counts[i, j]))
        return field

    # integral comparison: center term C k^(alpha/2) plus the annulus sum,
    # bounded by pi C k / (1 - alpha/2) + lower-order terms
    c2 = coefficient * (1.0 + math.pi / (1.0 - alpha / 2.0)) + 2.0
    # every site inside radius C^(1/alpha) sqrt(k) carries at least one
    # particle; half the disk area absorbs the lattice boundary error
    c1 = min(1.0, 0.5 * math.pi * coefficient ** (2.0 / alpha))
    return InitialConfigFamily(
        kind="radial_spike",
        d=2,
        params={"alpha": alpha, "coefficient": coefficient},
        mass_bounds=(c1, c2),
        support_factor=coefficient ** (1.0 / alpha) + 1.0,
        spread_target=8.0,
        generator=gen,
    )


def point_mass_family(d: int = 2) -> InitialConfigFamily:
    """The concentrated family mu^k = k particles on one site.

    Deliberately violates the spread hypothesis in d=2: the expected
    occupation at the origin grows like log(kt), so validate_spread flags
    it.  Useful as a negative control.
    """

    def gen(k: int) -> LatticeField:
        return LatticeField(d, {(0,) * d: k})

    return InitialConfigFamily(
        kind="point_mass",
        d=d,
        params={},
        mass_bounds=(1.0, 1.0),
        support_factor=1.0,
        spread_target=0.75,
        generator=gen,
    )


def custom_family(
    d: int,
    generator: Callable[[int], LatticeField],
    *,
    mass_bounds: tuple[float, float],
    support_factor: float,
    spread_target: float,
    params: dict | None = None,
) -> InitialConfigFamily:
    return InitialConfigFamily(
        kind="custom",
        d=d,
        params=params or {},
        mass_bounds=mass_bounds,
        support_factor=support_factor,
        spread_target=spread_target,
        generator=generator,
    )


FAMILY_BUILDERS: dict[str, Callable[..., InitialConfigFamily]] = {
    "point_spread": point_spread_family,
    "ball_bounded": ball_bounded_family,
    "radial_spike": radial_spike_family,
    "point_mass": point_mass_family,
}


def build_family(kind: str, **params) -> InitialConfigFamily:
    if kind not in FAMILY_BUILDERS:
        raise ValueError(f"unknown family kind {kind!r}; choose from {sorted(FAMILY_BUILDERS)}")
    return FAMILY_BUILDERS[kind](**params)


# -- validators ------------------------------------------------------------


def validate_family_invariants(family: InitialConfigFamily, k: int) -> None:
    """Exhaustively check the family's declared structure at scale k."""
    mu = family.field(k)
    mass = mu.total_mass()
    c1, c2 = family.mass_bounds
    if not c1 * k <= mass <= c2 * k:
        raise AssertionError(f"{family.kind}: mass {mass} outside [{c1 * k}, {c2 * k}]")
    radius = mu.support_radius()
    if radius > family.support_factor * math.sqrt(k) + 1e-9:
        raise AssertionError(
            f"{family.kind}: support radius {radius} exceeds "
            f"{family.support_factor} * sqrt({k})"
        )
    if family.kind == "point_spread":
        cap = family.params["per_site_cap"]
        if mu.max_count() > cap:
            raise AssertionError(f"point_spread: a site exceeds the cap {cap}")
    elif family.kind == "ball_bounded":
        _check_ball_occupancy(mu, family.params["c1"], family.params["c2"], k)
    elif family.kind == "radial_spike":
        _check_radial_profile(mu, family.params["alpha"], family.params["coefficient"], k)


def _check_ball_occupancy(mu: LatticeField, c1: float, c2: int, k: int) -> None:
    rho = 3.0 * c1 * k ** (1.0 / 6.0)
    coords, counts = mu.to_arrays()
    if counts.max(initial=0) > 1:
        raise AssertionError("ball_bounded: site with more than one particle")
    # spacing > ball diameter forces <= 2 sublattice coordinates per axis,
    # hence <= 8 points in any ball of radius rho; sublattice membership
    # makes the minimum pairwise distance equal to the spacing itself
    gap = 2 * math.ceil(rho) + 1
    if np.any(coords % gap):
        raise AssertionError("ball_bounded: a site fell off the sublattice")
    if gap <= 2.0 * rho:
        raise AssertionError(
            f"ball_bounded: spacing {gap} not above ball diameter {2 * rho}"
        )
    # direct probe: balls centered on support sites
    for center in coords:
        sq = np.sum((coords - center) ** 2, axis=1)
        inside = counts[sq <= rho * rho].sum()
        if inside > c2:
            raise AssertionError(
                f"ball_bounded: ball at {tuple(center)} holds {inside} > {c2} particles"
            )


def _check_radial_profile(
    mu: LatticeField, alpha: float, coefficient: float, k: int
) -> None:
    items = list(mu.items())
    for site, count in items:
        sq = sum(c * c for c in site)
        bound = coefficient * (k / (sq + 1.0)) ** (alpha / 2.0)
        if count > bound + 1e-9:
            raise AssertionError(f"radial_spike: count {count} at {site} above profile {bound}")
    # radially non-increasing: counts sorted by |site| never increase
    by_radius = sorted((sum(c * c for c in s), cnt) for s, cnt in items)
    best = math.inf
    seen_sq = -1
    for sq, cnt in by_radius:
        if sq > seen_sq:
            if cnt > best:
                raise AssertionError("radial_spike: profile increases with radius")
            best = cnt
            seen_sq = sq


@dataclass
class SpreadReport:
    """Exact spread statistic m(k, t) = max_x (mu^k * G_kt)(x) / k^(2 - d/2)."""

    family: str
    k_values: tuple[int, ...]
    t_values: tuple[float, ...]
    table: dict[tuple[int, float], float]
    target: float
    passed: bool

    def stat(self, k: int, t: float) -> float:
        return self.table[(k, t)]


def validate_spread(
    family: InitialConfigFamily,
    k_values: Sequence[int],
    t_values: Sequence[float],
    table: KernelTable,
) -> SpreadReport:
    """Scan the exact expected-occupation peak over a (k, t) grid.

    The peak is exact: the convolution mu^k * G_n covers the entire support
    of the expected occupation, and the field is zero beyond it.  The
    verdict asks that at the smallest tested time the peak sits at or below
    the family's declared target for every k.
    """
    t_values = sorted(float(t) for t in t_values)
    k_values = sorted(int(k) for k in k_values)
    if not t_values or not k_values:
        raise ValueError("need non-empty k and t grids")
    horizon = math.floor(k_values[-1] * t_values[-1])
    if horizon > table.n_max:
        raise HorizonError(
            f"spread scan needs G up to {horizon}, table holds {table.n_max}"
        )
    stats: dict[tuple[int, float], float] = {}
    for k in k_values:
        mu = family.field(k)
        scale = k ** (2.0 - family.d / 2.0)
        for t in t_values:
            n = math.floor(k * t)
            field = green_convolve(table, mu, n)
            stats[(k, t)] = float(np.max(field.values)) / scale if n > 0 else 0.0
    t_min = t_values[0]
    passed = all(stats[(k, t_min)] <= family.spread_target for k in k_values)
    return SpreadReport(
        family=family.kind,
        k_values=tuple(k_values),
        t_values=tuple(t_values),
        table=stats,
        target=family.spread_target,
        passed=passed,
    )
