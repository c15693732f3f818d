"""Exact step kernels and Green sums for the lazy nearest-neighbor walk.

The walk on Z^d (d = 2 or 3) takes each of the 2d+1 moves
{0, +e_1, -e_1, ..., +e_d, -e_d} with probability 1/(2d+1).  KernelTable
holds the n-step distributions P_n on centered boxes together with the
partial Green sums G_n = sum_{i<n} P_i.  The Gaussian side (heat kernel
phi_n and its time integral) lives in GaussKernel, and the rescaled Green
average used by the diagnostics in `rescaled_green_field`.

Numerical contract: every stored P_i is exactly invariant under the full
signed-permutation symmetry group of the lattice.  The stencil update adds
the +e/-e pair for each axis first (two-term sums commute exactly) and
reduces the per-axis sums through an elementwise sorted tree, so bitwise
symmetry survives floating-point rounding.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, HorizonError

# Beyond `SUPPORT_SIGMAS * sqrt(n)` lattice units the n-step kernel mass is
# below 1e-20 per step (Bernstein with per-step variance 2/(2d+1)), so boxes
# are clipped there; the clipped mass stays far under the 1e-12 conservation
# tolerance over any horizon this package builds.
SUPPORT_SIGMAS = 8.0
_MIN_CLIP_RADIUS = 32

DEFAULT_MEMORY_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class WalkSpec:
    """Dimension and derived constants of the lazy nearest-neighbor walk."""

    d: int

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")

    @property
    def neighborhood_size(self) -> int:
        return 2 * self.d + 1

    @property
    def moves(self) -> tuple[tuple[int, ...], ...]:
        """The 2d+1 admissible moves, the hold move first."""
        out = [tuple(0 for _ in range(self.d))]
        for axis in range(self.d):
            for sign in (1, -1):
                step = [0] * self.d
                step[axis] = sign
                out.append(tuple(step))
        return tuple(out)

    @property
    def step_probability(self) -> Fraction:
        return Fraction(1, self.neighborhood_size)

    @property
    def walk_variance(self) -> Fraction:
        """Per-coordinate variance of one step: 2/(2d+1)."""
        return Fraction(2, self.neighborhood_size)


@dataclass(frozen=True)
class BoxFunction:
    """A real-valued function supported on an axis-aligned lattice box.

    `values[i1, ..., id]` is the value at site `lo + (i1, ..., id)`;
    sites outside the box evaluate to zero.
    """

    values: np.ndarray
    lo: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.values.ndim != len(self.lo):
            raise ValueError("corner and array dimensions disagree")
        self.values.setflags(write=False)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def hi(self) -> tuple[int, ...]:
        return tuple(l + s - 1 for l, s in zip(self.lo, self.values.shape))

    def at(self, x: Sequence[int]) -> float:
        idx = tuple(int(c) - l for c, l in zip(x, self.lo))
        if any(i < 0 or i >= s for i, s in zip(idx, self.values.shape)):
            return 0.0
        return float(self.values[idx])

    def sites(self) -> Iterable[tuple[tuple[int, ...], float]]:
        """Yield (site, value) over the box in row-major (sorted) order."""
        for idx in np.ndindex(*self.values.shape):
            yield tuple(l + i for l, i in zip(self.lo, idx)), float(self.values[idx])

    def interpolate(self, x: Sequence[float]) -> float:
        """Multilinear interpolation between lattice sites (zero outside)."""
        base = [math.floor(c) for c in x]
        frac = [c - b for c, b in zip(x, base)]
        total = 0.0
        for corner in np.ndindex(*(2,) * self.d):
            w = 1.0
            for f, bit in zip(frac, corner):
                w *= f if bit else 1.0 - f
            if w:
                total += w * self.at([b + bit for b, bit in zip(base, corner)])
        return total

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _centered(values: np.ndarray) -> BoxFunction:
    r = (values.shape[0] - 1) // 2
    return BoxFunction(values, tuple(-r for _ in range(values.ndim)))


def clip_radius(step: int) -> int:
    """Box radius retained for the `step`-step kernel."""
    if step <= _MIN_CLIP_RADIUS:
        return step
    return min(step, max(_MIN_CLIP_RADIUS, math.ceil(SUPPORT_SIGMAS * math.sqrt(step))))


def _axis_pair_sums(padded: np.ndarray) -> list[np.ndarray]:
    """For each axis j, the exactly symmetric sum P(x - e_j) + P(x + e_j).

    `padded` carries a two-site margin; the sums are evaluated on the
    one-site-grown box (one margin site consumed by the shift).
    """
    d = padded.ndim
    sums = []
    for axis in range(d):
        sl_lo = tuple(slice(0, -2) if a == axis else slice(1, -1) for a in range(d))
        sl_hi = tuple(slice(2, None) if a == axis else slice(1, -1) for a in range(d))
        sums.append(padded[sl_lo] + padded[sl_hi])
    return sums


def stencil_step(prev: np.ndarray, d: int, radius_cap: int | None = None) -> np.ndarray:
    """One step of the lazy walk: average the 2d+1 neighbor values.

    The output covers the one-site-grown box (clipped to `radius_cap`).
    The reduction order is canonical under the lattice symmetry group, so a
    bitwise-symmetric input yields a bitwise-symmetric output: the +e/-e
    pair sums commute exactly, and for d = 3 the three axis sums are
    combined through an elementwise sorted (min/median/max) tree.
    """
    if d not in (2, 3) or prev.ndim != d:
        raise ValueError(f"need a d-cube array with d in (2, 3), got ndim {prev.ndim}, d {d}")
    r = (prev.shape[0] - 1) // 2
    padded = np.zeros(tuple(s + 4 for s in prev.shape), dtype=np.float64)
    padded[(slice(2, -2),) * d] = prev
    pair = _axis_pair_sums(padded)
    if d == 2:
        moved = pair[0]
        np.add(moved, pair[1], out=moved)
    else:
        s1, s2, s3 = pair
        lo = np.minimum(s1, s2)
        hi = np.maximum(s1, s2)
        np.minimum(lo, s3, out=s1)  # smallest of the three
        np.maximum(hi, s3, out=s2)  # largest of the three
        np.minimum(hi, s3, out=hi)
        np.maximum(lo, hi, out=hi)  # median of the three
        moved = s1
        np.add(moved, hi, out=moved)
        np.add(moved, s2, out=moved)
    np.add(moved, padded[(slice(1, -1),) * d], out=moved)
    moved *= 1.0 / (2 * d + 1)
    if radius_cap is not None and radius_cap < r + 1:
        cut = r + 1 - radius_cap
        moved = moved[(slice(cut, -cut),) * d].copy()
    return moved


def _table_entries(d: int, n_max: int) -> int:
    return sum((2 * clip_radius(i) + 1) ** d for i in range(n_max + 1))


class KernelTable:
    """Step kernels P_0 .. P_{n_max} and Green sums for one walk.

    Immutable after construction; all returned arrays are read-only views.
    """

    def __init__(
        self,
        spec: WalkSpec,
        n_max: int,
        *,
        memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
        _steps: list[np.ndarray] | None = None,
    ) -> None:
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        self.spec = spec
        self.n_max = n_max
        need = 8 * _table_entries(spec.d, n_max)
        if need > memory_budget_bytes:
            raise CapacityError(
                f"kernel table for d={spec.d}, n_max={n_max} needs ~{need} bytes, "
                f"budget is {memory_budget_bytes}"
            )
        if _steps is not None:
            self._steps = _steps
        else:
            self._steps = []
            cur = np.ones((1,) * spec.d, dtype=np.float64)
            self._steps.append(cur)
            for i in range(1, n_max + 1):
                cur = stencil_step(cur, spec.d, clip_radius(i))
                self._steps.append(cur)
        for arr in self._steps:
            arr.setflags(write=False)
        self._green_cache: dict[int, BoxFunction] = {}

    @property
    def d(self) -> int:
        return self.spec.d

    def step_radius(self, i: int) -> int:
        self._check_step(i)
        return (self._steps[i].shape[0] - 1) // 2

    def _check_step(self, i: int) -> None:
        if not 0 <= i <= self.n_max:
            raise HorizonError(f"step {i} outside table horizon {self.n_max}")

    def kernel(self, i: int) -> BoxFunction:
        """The i-step distribution P_i."""
        self._check_step(i)
        return _centered(self._steps[i])

    def probability(self, i: int, x: Sequence[int]) -> float:
        """P_i(x)."""
        return self.kernel(i).at(x)

    def green(self, n: int) -> BoxFunction:
        """G_n = sum_{i<n} P_i (so G_0 is identically zero)."""
        self._check_step(max(n - 1, 0))
        if n not in self._green_cache:
            r = self.step_radius(n - 1) if n > 0 else 0
            acc = np.zeros((2 * r + 1,) * self.d, dtype=np.float64)
            for i in range(n):
                ri = self.step_radius(i)
                sl = (slice(r - ri, r + ri + 1),) * self.d
                acc[sl] += self._steps[i]
            self._green_cache[n] = _centered(acc)
        return self._green_cache[n]

    def green_at(self, n: int, x: Sequence[int]) -> float:
        return self.green(n).at(x)

    # -- binary cache ---------------------------------------------------

    _MAGIC = b"EBKT"
    _VERSION = 1

    def save(self, path: str) -> None:
        """Write the table to a binary cache file.

        Header: magic, version, endianness tag, d, n_max, then one box
        radius per step; payload is each step's box in row-major float64.
        """
        with open(path, "wb") as fh:
            fh.write(self._MAGIC)
            fh.write(struct.pack("<BB", self._VERSION, 0))  # 0 => little-endian payload
            fh.write(struct.pack("<Bq", self.d, self.n_max))
            radii = np.array([self.step_radius(i) for i in range(self.n_max + 1)], dtype="<i8")
            fh.write(radii.tobytes())
            for arr in self._steps:
                fh.write(arr.astype("<f8", copy=False).tobytes())

    @classmethod
    def load(cls, path: str, *, memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET) -> "KernelTable":
        with open(path, "rb") as fh:
            if fh.read(4) != cls._MAGIC:
                raise ValueError(f"{path}: not a kernel cache file")
            version, endian = struct.unpack("<BB", fh.read(2))
            if version != cls._VERSION:
                raise ValueError(f"{path}: unsupported cache version {version}")
            if endian != 0:
                raise ValueError(f"{path}: unsupported payload endianness tag {endian}")
            d, n_max = struct.unpack("<Bq", fh.read(9))
            radii = np.frombuffer(fh.read(8 * (n_max + 1)), dtype="<i8")
            steps = []
            for i, r in enumerate(radii):
                expect = clip_radius(i)
                if r != expect:
                    raise ValueError(f"{path}: step {i} radius {r}, expected {expect}")
                count = (2 * int(r) + 1) ** d
                arr = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(np.float64)
                steps.append(arr.reshape((2 * int(r) + 1,) * d))
        spec = WalkSpec(d)
        return cls(spec, int(n_max), memory_budget_bytes=memory_budget_bytes, _steps=steps)


def build_kernel_table(
    spec: WalkSpec,
    n_max: int,
    *,
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
    cache_path: str | None = None,
) -> KernelTable:
    """Build (or reuse from `cache_path`) the kernel table up to n_max."""
    if cache_path is not None:
        try:
            table = KernelTable.load(cache_path, memory_budget_bytes=memory_budget_bytes)
            if table.d == spec.d and table.n_max >= n_max:
                return table
        except (OSError, ValueError):
            pass
    table = KernelTable(spec, n_max, memory_budget_bytes=memory_budget_bytes)
    if cache_path is not None:
        table.save(cache_path)
    return table


def _grown(arr: np.ndarray, radius: int) -> np.ndarray:
    """Zero-pad a centered box array out to the given radius."""
    have = (arr.shape[0] - 1) // 2
    if have == radius:
        return arr
    if have > radius:
        raise ValueError("cannot shrink a box array")
    out = np.zeros((2 * radius + 1,) * arr.ndim, dtype=arr.dtype)
    out[(slice(radius - have, radius + have + 1),) * arr.ndim] = arr
    return out


def green_checkpoints(
    spec: WalkSpec,
    steps: Sequence[int],
    *,
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
    cache_dir: str | None = None,
) -> dict[int, BoxFunction]:
    """Green sums G_n at the requested steps, via one streaming pass.

    KernelTable keeps every step kernel and is the right tool up to a few
    hundred steps in d=2; beyond that (d=3 especially) the dense store
    blows the budget.  This keeps only the current step kernel plus the
    running accumulator, so long horizons stay cheap: the peak footprint
    is a handful of arrays at the final clip radius.

    Returns {n: BoxFunction} with G_n = sum_{i<n} P_i.  G_0 is the empty
    sum.  With `cache_dir`, each checkpoint is stored as a .npy file and
    reused when every requested step is already present.
    """
    wanted = sorted({int(n) for n in steps})
    if not wanted:
        raise ValueError("no checkpoint steps requested")
    if wanted[0] < 0:
        raise ValueError(f"checkpoint steps must be >= 0, got {wanted[0]}")

    def _cache_file(n: int) -> str:
        return os.path.join(cache_dir, f"green_d{spec.d}_n{n}.npy")  # type: ignore[arg-type]

    if cache_dir is not None:
        cached: dict[int, BoxFunction] = {}
        for n in wanted:
            try:
                arr = np.load(_cache_file(n))
            except (OSError, ValueError):
                break
            if arr.ndim != spec.d or any(s % 2 == 0 for s in arr.shape):
                break
            cached[n] = _centered(np.asarray(arr, dtype=np.float64))
        if len(cached) == len(wanted):
            return cached
        # partial or stale cache: rebuild everything in one deterministic pass

    top = wanted[-1]
    peak_radius = clip_radius(max(top - 1, 0))
    peak = 8 * (2 * peak_radius + 1) ** spec.d * 7
    if peak > memory_budget_bytes:
        raise CapacityError(
            f"green checkpoints to n={top} in d={spec.d} need about {peak} bytes "
            f"of workspace, over the budget of {memory_budget_bytes}"
        )

    out: dict[int, BoxFunction] = {}
    remaining = set(wanted)
    cur = np.ones((1,) * spec.d, dtype=np.float64)  # P_0
    acc = np.zeros((1,) * spec.d, dtype=np.float64)  # G_0
    for i in range(top + 1):
        if i in remaining:
            out[i] = _centered(acc.copy())
            remaining.discard(i)
            if not remaining:
                break
        acc = _grown(acc, (cur.shape[0] - 1) // 2)
        acc += cur
        cur = stencil_step(cur, spec.d, radius_cap=clip_radius(i + 1))

    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        for n, box in out.items():
            np.save(_cache_file(n), box.values)
    return out


# -- streaming invariant verification ------------------------------------


@dataclass
class KernelCheckReport:
    """Outcome of the streaming kernel verification."""

    d: int
    n_max: int
    mass_error_max: float
    symmetry_exact: bool
    support_ok: bool
    boundary_exact: bool
    chapman_kolmogorov_error_max: float
    mass_tol: float
    ck_tol: float
    checks: int

    @property
    def passed(self) -> bool:
        return (
            self.mass_error_max <= self.mass_tol
            and self.symmetry_exact
            and self.support_ok
            and self.boundary_exact
            and self.chapman_kolmogorov_error_max <= self.ck_tol
        )


def _symmetry_exact(arr: np.ndarray) -> bool:
    """Bitwise invariance under axis flips and coordinate transpositions."""
    d = arr.ndim
    for axis in range(d):
        if not np.array_equal(arr, np.flip(arr, axis=axis)):
            return False
    for a in range(d):
        for b in range(a + 1, d):
            if not np.array_equal(arr, np.swapaxes(arr, a, b)):
                return False
    return True


def verify_table_invariants(
    spec: WalkSpec,
    n_max: int,
    *,
    mass_tol: float = 1e-12,
    ck_tol: float = 1e-10,
    ck_small_steps: tuple[int, ...] = (1, 3, 5),
    checkpoint_stride: int = 0,
) -> KernelCheckReport:
    """Stream P_0 .. P_{n_max}, checking conservation laws step by step.

    Memory stays at a handful of boxes: the first few steps are pinned for
    Chapman-Kolmogorov spot checks against the current step, and everything
    else is discarded as the recursion advances.  Checkpoints default to a
    geometric ladder of steps plus n_max itself.
    """
    d = spec.d
    if checkpoint_stride:
        checkpoints = set(range(checkpoint_stride, n_max + 1, checkpoint_stride))
    else:
        checkpoints = set()
        c = 8
        while c <= n_max:
            checkpoints.add(c)
            c *= 2
    checkpoints.add(n_max)

    small: dict[int, np.ndarray] = {}
    cur = np.ones((1,) * d, dtype=np.float64)
    mass_err = 0.0
    sym_ok = True
    support_ok = True
    boundary_ok = True
    ck_err = 0.0
    checks = 0
    edge_value = 1.0  # exact value of P_i at (i, 0, ..., 0) while the box is unclipped
    p = 1.0 / (2 * d + 1)

    for i in range(0, n_max + 1):
        r = (cur.shape[0] - 1) // 2
        if r > i:
            support_ok = False
        mass_err = max(mass_err, abs(float(cur.sum()) - 1.0))
        if not _symmetry_exact(cur):
            sym_ok = False
        if r == i:
            # the straight-line corner is reached by exactly one path
            idx = (2 * r,) + (r,) * (d - 1)
            if float(cur[idx]) != edge_value:
                boundary_ok = False
        if i in ck_small_steps:
            small[i] = cur.copy()
        if i in checkpoints and i > max(ck_small_steps):
            probes = [(0,) * d, (1,) + (0,) * (d - 1), (1,) * d,
                      (min(int(math.isqrt(i)), r),) + (0,) * (d - 1)]
            big = _centered(cur)
            for j, pj in small.items():
                prevk = _centered(_stream_kernel_at(spec, i - j, small))
                for x in probes:
                    lhs = big.at(x)
                    rhs = 0.0
                    pj_box = _centered(pj)
                    for site, val in pj_box.sites():
                        if val:
                            rhs += val * prevk.at([xc - sc for xc, sc in zip(x, site)])
                    ck_err = max(ck_err, abs(lhs - rhs))
                    checks += 1
        if i < n_max:
            cur = stencil_step(cur, d, clip_radius(i + 1))
            edge_value *= p

    return KernelCheckReport(
        d=d,
        n_max=n_max,
        mass_error_max=mass_err,
        symmetry_exact=sym_ok,
        support_ok=support_ok,
        boundary_exact=boundary_ok,
        chapman_kolmogorov_error_max=ck_err,
        mass_tol=mass_tol,
        ck_tol=ck_tol,
        checks=checks,
    )


_CK_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _stream_kernel_at(spec: WalkSpec, n: int, small: dict[int, np.ndarray]) -> np.ndarray:
    """Recompute P_n from scratch (memoized) for spot checks."""
    key = (spec.d, n)
    if key not in _CK_CACHE:
        cur = np.ones((1,) * spec.d, dtype=np.float64)
        for i in range(1, n + 1):
            cur = stencil_step(cur, spec.d, clip_radius(i))
        _CK_CACHE[key] = cur
    return _CK_CACHE[key]


# -- convolution with initial fields --------------------------------------


def shifted_accumulate(
    kernel: BoxFunction, sources: Iterable[tuple[Sequence[int], float]]
) -> BoxFunction:
    """Sum of `weight * kernel(. - site)` over weighted source sites."""
    pts = [(tuple(int(c) for c in site), float(w)) for site, w in sources]
    if not pts:
        return BoxFunction(np.zeros((1,) * kernel.d), (0,) * kernel.d)
    d = kernel.d
    lo = tuple(min(s[a] for s, _ in pts) + kernel.lo[a] for a in range(d))
    hi = tuple(max(s[a] for s, _ in pts) + kernel.lo[a] + kernel.values.shape[a] - 1
               for a in range(d))
    out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)), dtype=np.float64)
    for site, w in pts:
        idx = tuple(
            slice(site[a] + kernel.lo[a] - lo[a],
                  site[a] + kernel.lo[a] - lo[a] + kernel.values.shape[a])
            for a in range(d)
        )
        out[idx] += w * kernel.values
    return BoxFunction(out, lo)


def green_convolve(table: KernelTable, mu, n: int) -> BoxFunction:
    """The expected occupation field (mu * G_n), exact on its full support.

    `mu` is any iterable of (site, count) pairs or an object exposing
    `.items()`; the result covers the Minkowski sum of supp(mu) with the
    G_n box and is zero beyond it.
    """
    items = mu.items() if hasattr(mu, "items") else mu
    return shifted_accumulate(table.green(n), items)


def green_interpolate(table: KernelTable, mu, t: float, x: Sequence[float]) -> float:
    """(mu * G_t)(x) extended linearly in t and multilinearly in x."""
    if t < 0:
        raise ValueError("time must be non-negative")
    lo_n = math.floor(t)
    frac = t - lo_n
    items = list(mu.items() if hasattr(mu, "items") else mu)
    lo_val = green_convolve(table, items, lo_n).interpolate(x)
    if frac == 0.0:
        return lo_val
    hi_val = green_convolve(table, items, lo_n + 1).interpolate(x)
    return (1.0 - frac) * lo_val + frac * hi_val


# -- Gaussian comparison kernel -------------------------------------------


def _adaptive_simpson(
    f: Callable[[float], float], a: float, b: float, tol: float, max_depth: int = 48
) -> float:
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, fm, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, fa, m, fm, flm, left, tol / 2.0, depth + 1) + recurse(
            m, fm, b, fb, frm, right, tol / 2.0, depth + 1
        )

    return recurse(a, fa, b, fb, fm, whole, tol, 0)


@dataclass(frozen=True)
class GaussKernel:
    """Continuum heat kernel matched to the d-dimensional lattice walk."""

    d: int

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")

    def density(self, n: float, x) -> np.ndarray | float:
        """phi_n(x) = (2 pi n)^(-d/2) exp(-|x|^2 / (2n))."""
        if n <= 0:
            raise ValueError("time parameter must be positive")
        sq = self._sqnorm(x)
        return np.exp(-sq / (2.0 * n)) / (2.0 * math.pi * n) ** (self.d / 2.0)

    def density_from_sqnorm(self, n: float, sqnorm) -> np.ndarray | float:
        if n <= 0:
            raise ValueError("time parameter must be positive")
        return np.exp(-np.asarray(sqnorm, dtype=np.float64) / (2.0 * n)) / (
            2.0 * math.pi * n
        ) ** (self.d / 2.0)

    def pair_density(self, n: float, x, y) -> np.ndarray | float:
        """phi_n(x) + phi_n(y)."""
        return self.density(n, x) + self.density(n, y)

    def occupation(self, t: float, x, *, eps: float = 1e-8, tol: float = 1e-12) -> float:
        """q_t(x) = integral of phi_s(x) over s in (0, t].

        The integral diverges at x = 0 (for d >= 2), so that point is a
        domain error.  For x != 0 the integrand vanishes as s -> 0; the
        neglected piece below `eps` is under exp(-|x|^2/(2 eps)), which is
        zero to double precision for every |x| this package evaluates.
        """
        if t <= 0:
            raise ValueError("time must be positive")
        sq = float(self._sqnorm(x))
        if sq < 100.0 * eps:
            raise ValueError(
                "occupation integral diverges at the spatial origin; "
                f"|x|^2 = {sq} is inside the divergence guard"
            )
        if t <= eps:
            return 0.0
        return _adaptive_simpson(
            lambda s: float(self.density_from_sqnorm(s, sq)), eps, t, tol
        )

    def _sqnorm(self, x) -> np.ndarray | float:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 0:
            return arr**2
        if arr.shape[-1] != self.d:
            raise ValueError(f"expected coordinates of dimension {self.d}")
        return np.sum(arr * arr, axis=-1)


# -- rescaled Green average ------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """A bounded test function on R^d with declared compact support.

    `fn` must accept an (..., d) coordinate array and evaluate pointwise;
    `radius` bounds the support, `bound` the sup norm.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    radius: float
    bound: float
    name: str = "psi"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=np.float64)), dtype=np.float64)


def gaussian_bump(d: int, *, radius: float = 1.0, height: float = 1.0) -> TestFunction:
    """A smooth compactly supported bump, exp-shaped inside |x| < radius."""

    def fn(x: np.ndarray) -> np.ndarray:
        sq = np.sum(np.square(x), axis=-1) / radius**2
        out = np.zeros_like(sq)
        mask = sq < 1.0
        out[mask] = height * np.exp(1.0 - 1.0 / (1.0 - sq[mask]))
        return out

    return TestFunction(fn, radius=radius, bound=height, name=f"bump{radius:g}")


def indicator_ball(d: int, *, radius: float = 1.0, height: float = 1.0) -> TestFunction:
    def fn(x: np.ndarray) -> np.ndarray:
        sq = np.sum(np.square(x), axis=-1)
        return np.where(sq <= radius**2, height, 0.0)

    return TestFunction(fn, radius=radius, bound=height, name=f"ball{radius:g}")


@dataclass(frozen=True)
class RescaledGreenField:
    """Space-rescaled Green average at one macroscopic time.

    Values live on the lattice scaled by 1/sqrt(k); `at_site(j)` reads the
    value at macroscopic point j/sqrt(k), and `interpolate` extends
    multilinearly between grid points.
    """

    grid: BoxFunction
    k: int
    t: float
    bound: float  # sup norm of the test function

    def at_site(self, j: Sequence[int]) -> float:
        return self.grid.at(j)

    def interpolate(self, x: Sequence[float]) -> float:
        scaled = [c * math.sqrt(self.k) for c in x]
        return self.grid.interpolate(scaled)


def rescaled_green_field(
    table: KernelTable,
    psi: TestFunction,
    k: int,
    t: float,
    *,
    window_radius: int | None = None,
) -> RescaledGreenField:
    """(1/k) sum_y psi(y / sqrt(k)) G_{kt}(. - y) on the 1/sqrt(k) lattice.

    `k * t` must be an integer step count within the table horizon.  Every
    grid value is checked against the exact a-priori bound sup|psi| * t.
    """
    n_float = k * t
    n = round(n_float)
    if abs(n_float - n) > 1e-9:
        raise ValueError(f"k*t = {n_float} is not an integer step count")
    if n > table.n_max:
        raise HorizonError(f"k*t = {n} beyond table horizon {table.n_max}")
    root_k = math.sqrt(k)
    span = math.ceil(psi.radius * root_k)
    axes = [np.arange(-span, span + 1)] * table.d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    weights = psi(mesh / root_k)
    green = table.green(n)
    sources = []
    nz = np.argwhere(weights != 0.0)
    for idx in nz:
        site = tuple(int(a[i]) for a, i in zip(axes, idx))
        sources.append((site, float(weights[tuple(idx)]) / k))
    acc = shifted_accumulate(green, sources)
    if window_radius is not None:
        lo = tuple(max(l, -window_radius) for l in acc.lo)
        hi = tuple(min(h, window_radius) for h in acc.hi)
        sl = tuple(slice(l - al, h - al + 1) for l, h, al in zip(lo, hi, acc.lo))
        acc = BoxFunction(acc.values[sl].copy(), lo)
    limit = psi.bound * t * (1.0 + 1e-9) + 1e-12
    if acc.values.size and float(np.max(np.abs(acc.values))) > limit:
        raise AssertionError(
            "rescaled Green average exceeded its mass bound; kernel table is inconsistent"
        )
    return RescaledGreenField(grid=acc, k=k, t=float(t), bound=psi.bound)
