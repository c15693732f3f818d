"""Exact moments and cumulants of occupation pairings.

Everything in this module is deterministic arithmetic on small centered
arrays; no sampling.  The log moment generating field of a pairing
``<sum of generations, psi>`` satisfies a one-step recursion through the
offspring generating function, and its Taylor coefficients in the pairing
strength obey the same recursion order by order.  These exact values are
the oracles the Monte Carlo layers are checked against.

Conventions
-----------
* ``nu_recursion`` / ``cumulant_recursion`` accumulate generations 1..n
  seen from a single ancestor ("gen_1_to_n"): nu_0 = 0 and

      nu_{i+1}(x) = log g( avg_e exp(psi + nu_i)(x + e) ),

  where g is the total-offspring pgf and avg_e the lazy-walk stencil
  average.  The variant counting generations 0..n-1
  ("gen_0_to_n_minus_1") is the exact shift psi + nu_{n-1}, applied on
  request; it never re-runs the recursion.
* Cumulant tables hold the theta^h *coefficients* of nu with psi scaled
  by theta.  The variance of the pairing is therefore 2 * kappa_2.
* ``cumulant_time_increment`` covers a late window of n generations
  starting at generation m.  Its m = 0 base is the gen_0_to_n_minus_1
  value, and each evolution step applies the offspring recursion with no
  fresh psi term.
* Order-1 coefficients have the closed form sum of kernel smoothings of
  psi (``first_cumulant_exact``); orders >= 2 can be rebuilt from the
  per-step nonlinear residuals (``iterated_cumulant``).  Both identities
  hold for critical laws only, which is why the cumulant entry points
  insist on mean-one offspring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, DivergenceError
from .lattice_kernel import BoxFunction, KernelTable, WalkSpec, _centered, shifted_accumulate, stencil_step
from .offspring import OffspringLaw

__all__ = [
    "CumulantTable",
    "MomentReport",
    "brute_force_mgf",
    "cumulant_recursion",
    "cumulant_time_increment",
    "first_cumulant_exact",
    "iterated_cumulant",
    "mean_fields",
    "nu_recursion",
    "nu_time_increment",
    "paired_log_mgf",
    "pairing_function",
    "second_moment",
]

CONVENTIONS = ("gen_1_to_n", "gen_0_to_n_minus_1")

DEFAULT_DIVERGENCE_BOUND = 50.0


# -- pairing functions -------------------------------------------------------


def pairing_function(d: int, weights: Mapping[Sequence[int], float]) -> BoxFunction:
    """Finite-support pairing weights from a {site: value} mapping."""
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if not weights:
        return BoxFunction(np.zeros((1,) * d), (0,) * d)
    r = 0
    for site in weights:
        if len(site) != d:
            raise ValueError(f"site {site} does not have {d} coordinates")
        r = max(r, max(abs(int(c)) for c in site))
    out = np.zeros((2 * r + 1,) * d)
    for site, value in weights.items():
        out[tuple(int(c) + r for c in site)] += float(value)
    return _centered(out)


def _as_centered(psi: BoxFunction) -> np.ndarray:
    """Embed a box function into the smallest centered cube containing it."""
    d = psi.d
    r = 0
    for a in range(d):
        r = max(r, abs(psi.lo[a]), abs(psi.hi[a]))
    out = np.zeros((2 * r + 1,) * d)
    idx = tuple(slice(psi.lo[a] + r, psi.lo[a] + r + psi.values.shape[a]) for a in range(d))
    out[idx] += psi.values
    return out


def _add_centered(target: np.ndarray, small: np.ndarray) -> None:
    # both centered cubes; the smaller one lands in the middle
    pad = (target.shape[0] - small.shape[0]) // 2
    if pad < 0:
        raise ValueError("pairing support exceeds the working box")
    idx = tuple(slice(pad, pad + s) for s in small.shape)
    target[idx] += small


def _box_add(a: BoxFunction, b: BoxFunction) -> BoxFunction:
    """Pointwise sum of two box functions on the union box."""
    d = a.d
    lo = tuple(min(a.lo[i], b.lo[i]) for i in range(d))
    hi = tuple(max(a.hi[i], b.hi[i]) for i in range(d))
    out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)))
    for part in (a, b):
        idx = tuple(slice(part.lo[i] - lo[i], part.lo[i] - lo[i] + part.values.shape[i]) for i in range(d))
        out[idx] += part.values
    return BoxFunction(out, lo)


def paired_log_mgf(nu: BoxFunction, mu) -> float:
    """<mu, nu>: the log MGF of the pairing under independent ancestors mu."""
    items = mu.items() if hasattr(mu, "items") else mu
    return math.fsum(float(c) * nu.at(site) for site, c in items)


# -- scalar log-MGF recursion ------------------------------------------------


def _log_pgf_shifted(law: OffspringLaw, w: np.ndarray) -> np.ndarray:
    """log g(1 + w) elementwise, stable for small w.

    Works in the deviation-from-one variable throughout: g(1 + w) - 1 is
    a polynomial with zero constant term (coefficients b_m = sum_j p_j *
    C(j, m)), so log1p keeps full precision where w is tiny -- which is
    everywhere far from the pairing support.
    """
    if law.kind == "poisson_unit":
        return w.copy()
    b = [Fraction(0)] * (law.max_children + 1)
    for j, p in enumerate(law.probabilities):
        for m in range(1, j + 1):
            b[m] += p * math.comb(j, m)
    acc = np.zeros_like(w)
    for coeff in reversed(b[1:]):
        acc = acc * w + float(coeff)
    acc *= w
    if np.any(acc <= -1.0):
        raise DivergenceError("offspring pgf non-positive inside the recursion")
    return np.log1p(acc)


def _check_bounded(arr: np.ndarray, bound: float, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"{what} overflowed; the pairing MGF does not exist")
    top = float(np.max(np.abs(arr))) if arr.size else 0.0
    if top > bound:
        raise DivergenceError(f"{what} reached magnitude {top:.3g} (bound {bound:g})")


def _require_scalar_law(law: OffspringLaw) -> None:
    if not law.supports_scalar_recursion:
        raise ValueError(
            f"{law.label} has no total-count generating function; "
            "the scalar recursion does not apply"
        )


def _require_critical(law: OffspringLaw) -> None:
    if law.mean_total() != 1:
        raise ValueError(
            f"{law.label} has offspring mean {law.mean_total()}; the cumulant "
            "identities assume a critical (mean-one) law"
        )


def nu_recursion(
    law: OffspringLaw,
    psi: BoxFunction,
    n: int,
    *,
    convention: str = "gen_1_to_n",
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
) -> list[BoxFunction]:
    """Exact log-MGF fields of the pairing, one entry per horizon 0..n.

    Entry i is nu_i with nu_i(x) = log E exp <sum of generations, psi>
    for a single ancestor at x; which generations are summed is set by
    `convention`.  Raises DivergenceError when the MGF blows up along the
    way (pairings with positive parts can have infinite exponential
    moments).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    _require_scalar_law(law)
    if n < 0:
        raise ValueError("horizon must be non-negative")
    d = psi.d
    psi0 = _as_centered(psi)
    nu = np.zeros_like(psi0)
    out = [_centered(nu.copy())]
    for _ in range(n):
        cur = nu.copy()
        _add_centered(cur, psi0)
        # average of exp(cur) minus one: expm1 vanishes outside the box,
        # so the zero padding of the stencil is the correct continuation
        with np.errstate(over="ignore"):
            s1 = stencil_step(np.expm1(cur), d)
        nu = _log_pgf_shifted(law, s1)
        _check_bounded(nu, divergence_bound, "log MGF")
        out.append(_centered(nu.copy()))
    if convention == "gen_0_to_n_minus_1":
        return [out[0]] + [_shift_by_psi(out[i - 1], psi0) for i in range(1, n + 1)]
    return out


def _grow_to(arr: np.ndarray, side: int) -> np.ndarray:
    pad = (side - arr.shape[0]) // 2
    out = np.zeros((side,) * arr.ndim)
    idx = tuple(slice(pad, pad + s) for s in arr.shape)
    out[idx] += arr
    return out


def _shift_by_psi(nu: BoxFunction, psi0: np.ndarray) -> BoxFunction:
    """psi + nu on the union cube (the generation-window shift)."""
    base = _as_centered(nu)
    side = max(base.shape[0], psi0.shape[0])
    out = _grow_to(base, side)
    _add_centered(out, psi0)
    return _centered(out)


def nu_time_increment(
    law: OffspringLaw,
    psi: BoxFunction,
    n: int,
    m: int,
    *,
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
) -> list[BoxFunction]:
    """Log-MGF fields of an n-generation window, entries for starts 0..m.

    Entry j is the log MGF of <generations j..j+n-1, psi> seen from one
    ancestor.  The j = 0 base is the gen_0_to_n_minus_1 field; each later
    start applies the offspring recursion with no fresh psi term.
    """
    _require_scalar_law(law)
    if n < 1:
        raise ValueError("window must cover at least one generation")
    if m < 0:
        raise ValueError("window start must be non-negative")
    d = psi.d
    psi0 = _as_centered(psi)
    base = nu_recursion(law, psi, n - 1, divergence_bound=divergence_bound)[-1]
    cur = _as_centered(_shift_by_psi(base, psi0))
    out = [_centered(cur.copy())]
    for _ in range(m):
        with np.errstate(over="ignore"):
            s1 = stencil_step(np.expm1(cur), d)
        cur = _log_pgf_shifted(law, s1)
        _check_bounded(cur, divergence_bound, "log MGF")
        out.append(_centered(cur.copy()))
    return out


# -- truncated power series in the pairing strength --------------------------
#
# A series is a list of equal-shape arrays; entry h-1 is the theta^h
# coefficient and the constant term is implied (0 for exponents, handled
# explicitly in _series_exp).


def _series_product(x: list[np.ndarray], y: list[np.ndarray]) -> list[np.ndarray]:
    h_max = len(x)
    out = [np.zeros_like(x[0]) for _ in range(h_max)]
    for i in range(1, h_max):
        for j in range(1, h_max - i + 1):
            out[i + j - 1] += x[i - 1] * y[j - 1]
    return out


def _series_exp(series: list[np.ndarray]) -> list[np.ndarray]:
    """exp of a zero-constant series; returns orders 0..h_max."""
    h_max = len(series)
    out = [np.ones_like(series[0])]
    for m in range(1, h_max + 1):
        acc = np.zeros_like(series[0])
        for j in range(1, m + 1):
            acc += j * series[j - 1] * out[m - j]
        out.append(acc / m)
    return out


def _series_log_pgf(law: OffspringLaw, w: list[np.ndarray]) -> list[np.ndarray]:
    """log g(1 + W) for a zero-constant series W.  Exact: powers of W
    beyond the truncation order cannot feed back into kept orders."""
    h_max = len(w)
    a = law.log_pgf_expansion(h_max).as_floats()
    out = [a[0] * wh for wh in w]
    power = w
    for l in range(2, h_max + 1):
        power = _series_product(power, w)
        if a[l - 1] == 0.0:
            continue
        for h in range(l, h_max + 1):
            out[h - 1] = out[h - 1] + a[l - 1] * power[h - 1]
    return out


# -- cumulant tables ----------------------------------------------------------


@dataclass
class CumulantTable:
    """Taylor coefficients of the pairing log-MGF, per order and step.

    `coefficients[h-1][i]` is the order-h coefficient after i steps.  For
    the window flavor, step i means window start i and `window_span` is
    the number of generations covered.  `residuals[h-1][i-1]` is the
    nonlinear part of step i (what the step adds beyond one stencil
    smoothing of the previous coefficient); it vanishes identically at
    order 1.
    """

    d: int
    law_label: str
    convention: str
    h_max: int
    steps: int
    coefficients: list[list[BoxFunction]]
    residuals: list[list[BoxFunction]] | None
    window_span: int | None = None

    def kappa(self, h: int, i: int | None = None) -> BoxFunction:
        if not 1 <= h <= self.h_max:
            raise ValueError(f"order {h} outside 1..{self.h_max}")
        i = self.steps if i is None else i
        return self.coefficients[h - 1][i]

    def residual(self, h: int, i: int) -> BoxFunction:
        if self.residuals is None:
            raise ValueError("this table was built by shifting; no step residuals")
        if not 1 <= i <= self.steps:
            raise ValueError(f"step {i} outside 1..{self.steps}")
        return self.residuals[h - 1][i - 1]

    def variance(self, i: int | None = None) -> BoxFunction:
        """Pairing variance per ancestor site: 2 * kappa_2."""
        k2 = self.kappa(2, i)
        return BoxFunction(2.0 * k2.values, k2.lo)

    def log_mgf(self, mu, theta: float = 1.0, i: int | None = None) -> float:
        """Taylor evaluation sum_h theta^h <mu, kappa_h> at step i."""
        items = list(mu.items() if hasattr(mu, "items") else mu)
        total = 0.0
        for h in range(1, self.h_max + 1):
            field = self.kappa(h, i)
            total += theta**h * math.fsum(float(c) * field.at(site) for site, c in items)
        return total

    def summary(self) -> dict:
        return {
            "d": self.d,
            "law": self.law_label,
            "convention": self.convention,
            "h_max": self.h_max,
            "steps": self.steps,
            "window_span": self.window_span,
            "max_abs": {h: self.kappa(h).max_abs() for h in range(1, self.h_max + 1)},
        }

    def as_json(self) -> str:
        body = self.summary()
        body["final"] = {
            str(h): {
                "lo": list(self.kappa(h).lo),
                "values": self.kappa(h).values.tolist(),
            }
            for h in range(1, self.h_max + 1)
        }
        return json.dumps(body, sort_keys=True)


def _series_step(
    law: OffspringLaw, d: int, cur: list[np.ndarray]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """One offspring step of a coefficient series; returns (new, residual)."""
    e = _series_exp(cur)
    w = [stencil_step(e[h], d) for h in range(1, len(cur) + 1)]
    new = _series_log_pgf(law, w)
    xi = [new[h] - stencil_step(cur[h], d) for h in range(len(cur))]
    return new, xi


def cumulant_recursion(
    law: OffspringLaw,
    psi: BoxFunction,
    n: int,
    h_max: int,
    *,
    convention: str = "gen_1_to_n",
) -> CumulantTable:
    """Cumulant coefficient fields of <generations 1..i, psi>, i = 0..n.

    Runs the log-MGF recursion order by order in the pairing strength;
    every truncation is exact because higher orders never feed back into
    lower ones.  Critical scalar laws only.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    _require_scalar_law(law)
    _require_critical(law)
    if h_max < 1:
        raise ValueError("need at least the first order")
    if n < 0:
        raise ValueError("horizon must be non-negative")
    d = psi.d
    psi0 = _as_centered(psi)
    kappa = [np.zeros_like(psi0) for _ in range(h_max)]
    coeffs = [[_centered(k.copy()) for k in kappa]]
    residuals: list[list[np.ndarray]] = []
    for _ in range(n):
        cur = [k.copy() for k in kappa]
        _add_centered(cur[0], psi0)
        kappa, xi = _series_step(law, d, cur)
        residuals.append(xi)
        coeffs.append([_centered(k.copy()) for k in kappa])
    table = CumulantTable(
        d=d,
        law_label=law.label,
        convention="gen_1_to_n",
        h_max=h_max,
        steps=n,
        coefficients=[[coeffs[i][h] for i in range(n + 1)] for h in range(h_max)],
        residuals=[[_centered(residuals[i][h]) for i in range(n)] for h in range(h_max)],
    )
    if convention == "gen_0_to_n_minus_1":
        return _shift_table(table, psi0)
    return table


def _shift_table(table: CumulantTable, psi0: np.ndarray) -> CumulantTable:
    """Exact generation-window shift: kappa'_{h,i} = [h=1] psi + kappa_{h,i-1}."""
    zero = BoxFunction(np.zeros((1,) * table.d), (0,) * table.d)
    coeffs: list[list[BoxFunction]] = []
    for h in range(1, table.h_max + 1):
        row = [zero]
        for i in range(1, table.steps + 1):
            prev = table.kappa(h, i - 1)
            if h == 1:
                row.append(_shift_by_psi(prev, psi0))
            else:
                row.append(prev)
        coeffs.append(row)
    return CumulantTable(
        d=table.d,
        law_label=table.law_label,
        convention="gen_0_to_n_minus_1",
        h_max=table.h_max,
        steps=table.steps,
        coefficients=coeffs,
        residuals=None,
    )


def cumulant_time_increment(
    law: OffspringLaw,
    psi: BoxFunction,
    n: int,
    m: int,
    h_max: int,
) -> CumulantTable:
    """Cumulant coefficients of an n-generation window at starts 0..m.

    The start-0 base counts generations 0..n-1; each later start applies
    the offspring step with no fresh psi term, so the order-1 coefficient
    stays the exact kernel sum over the shifted window.
    """
    _require_scalar_law(law)
    _require_critical(law)
    if n < 1:
        raise ValueError("window must cover at least one generation")
    if m < 0:
        raise ValueError("window start must be non-negative")
    d = psi.d
    psi0 = _as_centered(psi)
    base = cumulant_recursion(law, psi, n - 1, h_max)
    kappa = [_as_centered(base.kappa(h, n - 1)) for h in range(1, h_max + 1)]
    side = max(kappa[0].shape[0], psi0.shape[0])
    kappa = [_grow_to(k, side) for k in kappa]
    _add_centered(kappa[0], psi0)
    coeffs = [[_centered(k.copy()) for k in kappa]]
    residuals: list[list[np.ndarray]] = []
    for _ in range(m):
        cur = [k.copy() for k in kappa]
        kappa, xi = _series_step(law, d, cur)
        residuals.append(xi)
        coeffs.append([_centered(k.copy()) for k in kappa])
    return CumulantTable(
        d=d,
        law_label=law.label,
        convention="window",
        h_max=h_max,
        steps=m,
        coefficients=[[coeffs[i][h] for i in range(m + 1)] for h in range(h_max)],
        residuals=[[_centered(residuals[i][h]) for i in range(m)] for h in range(h_max)],
        window_span=n,
    )


def first_cumulant_exact(kernels: KernelTable, psi: BoxFunction, lo: int, hi: int) -> BoxFunction:
    """sum_{l=lo}^{hi} P_l * psi: the exact order-1 coefficient of any
    generation window (lo..hi inclusive; empty windows give zero)."""
    if lo < 0:
        raise ValueError("window start must be non-negative")
    acc = BoxFunction(np.zeros((1,) * psi.d), (0,) * psi.d)
    for l in range(lo, hi + 1):
        acc = _box_add(acc, shifted_accumulate(kernels.kernel(l), psi.sites()))
    return acc


def iterated_cumulant(table: CumulantTable, kernels: KernelTable, h: int) -> BoxFunction:
    """Rebuild the final order-h coefficient from the step residuals.

    Uses kappa_{h, steps} = P_steps * kappa_{h, 0}
                            + sum_{j=1..steps} P_{steps-j} * residual_j,
    which telescopes the per-step split "stencil smoothing plus nonlinear
    residue".  Orders >= 2 only; order 1 has the closed kernel-sum form.
    """
    if h < 2:
        raise ValueError("order 1 has the closed form; see first_cumulant_exact")
    if table.residuals is None:
        raise ValueError("this table was built by shifting; rebuild it directly")
    n = table.steps
    acc = shifted_accumulate(kernels.kernel(n), table.kappa(h, 0).sites())
    for j in range(1, n + 1):
        part = shifted_accumulate(kernels.kernel(n - j), table.residual(h, j).sites())
        acc = _box_add(acc, part)
    return acc


# -- closed-form low moments ---------------------------------------------------


def mean_fields(kernels: KernelTable, mu, n: int) -> tuple[BoxFunction, BoxFunction]:
    """(E X_n, E R_n) for independent mean-one ancestors mu."""
    items = list(mu.items() if hasattr(mu, "items") else mu)
    x_mean = shifted_accumulate(kernels.kernel(n), items)
    r_mean = shifted_accumulate(kernels.green(n), items)
    return x_mean, r_mean


def second_moment(
    law: OffspringLaw,
    kernels: KernelTable,
    x: Sequence[int],
    n: int,
    mu=None,
) -> float:
    """E X_n(x)^2 for ancestors mu (default: one particle at the origin).

    Closed form per ancestor: P_n(x) plus the total-offspring variance
    times sum_{i<n} P_i * (P_{n-i}^2)(x).  Valid for laws that place a
    sampled total uniformly; the per-target binomial law correlates
    placements and its 1/N corrections break the identity, so it is
    rejected rather than silently mispriced.
    """
    if law.kind == "binomial_envelope":
        raise ValueError(
            f"{law.label} places counts per target, not a uniform total; "
            "the pair-moment closed form does not apply to it"
        )
    _require_critical(law)
    if not 0 <= n <= kernels.n_max:
        raise ValueError(f"horizon {n} outside the kernel table (0..{kernels.n_max})")
    sigma2 = float(law.variance_total())
    kernel_n = kernels.kernel(n)
    acc = BoxFunction(kernel_n.values.copy(), kernel_n.lo)
    for i in range(n):
        outer = kernels.kernel(n - i)
        squared = BoxFunction(outer.values * outer.values, outer.lo)
        part = shifted_accumulate(squared, kernels.kernel(i).sites())
        acc = _box_add(acc, BoxFunction(sigma2 * part.values, part.lo))
    if mu is None:
        return acc.at(x)
    items = list(mu.items() if hasattr(mu, "items") else mu)
    mean = math.fsum(float(c) * kernel_n.at(tuple(xc - yc for xc, yc in zip(x, site))) for site, c in items)
    var = math.fsum(
        float(c)
        * (
            acc.at(tuple(xc - yc for xc, yc in zip(x, site)))
            - kernel_n.at(tuple(xc - yc for xc, yc in zip(x, site))) ** 2
        )
        for site, c in items
    )
    return var + mean * mean


# -- exact enumeration ---------------------------------------------------------


def _vector_pmf(law: OffspringLaw) -> dict[tuple[int, ...], Fraction]:
    """Exact arrival-vector law of one parent across the 2d+1 targets."""
    q = law.neighborhood_size
    out: dict[tuple[int, ...], Fraction] = {}
    if law.kind == "custom":
        for k, p in enumerate(law.probabilities):
            if p == 0:
                continue
            base = Fraction(p, q**k) * Fraction(math.factorial(k))
            for vec in _compositions(k, q):
                denom = 1
                for c in vec:
                    denom *= math.factorial(c)
                out[vec] = out.get(vec, Fraction(0)) + base / denom
        return out
    if law.kind == "binomial_envelope":
        n_tr = law.village_size
        p = Fraction(1, q * n_tr)
        marginal = [
            Fraction(math.comb(n_tr, j)) * p**j * (1 - p) ** (n_tr - j) for j in range(n_tr + 1)
        ]
        for vec in iter_product(range(n_tr + 1), repeat=q):
            w = Fraction(1)
            for c in vec:
                w *= marginal[c]
            out[vec] = w
        return out
    raise ValueError(f"{law.label} has unbounded totals; exact enumeration needs finite support")


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _convolve_pmf(
    a: dict[tuple[int, ...], Fraction], b: dict[tuple[int, ...], Fraction]
) -> dict[tuple[int, ...], Fraction]:
    out: dict[tuple[int, ...], Fraction] = {}
    for va, wa in a.items():
        for vb, wb in b.items():
            key = tuple(x + y for x, y in zip(va, vb))
            out[key] = out.get(key, Fraction(0)) + wa * wb
    return out


def brute_force_mgf(
    law: OffspringLaw,
    mu,
    psi: BoxFunction,
    n: int,
    *,
    window: tuple[int, int] | None = None,
    state_budget: int = 500_000,
) -> float:
    """E exp <generations window[0]..window[1], psi> by exhaustive enumeration.

    Exact rational path weights, one float exp per leaf.  Only feasible
    for finite-support laws, small ancestors and n <= 3 or so; the
    `state_budget` caps the number of expanded outcomes.  Default window
    is (1, n), matching the gen_1_to_n recursion.
    """
    lo, hi = window if window is not None else (1, n)
    if not 0 <= lo <= hi <= n:
        raise ValueError(f"window {lo}..{hi} must sit inside 0..{n}")
    one_parent = _vector_pmf(law)
    by_count: dict[int, dict[tuple[int, ...], Fraction]] = {1: one_parent}

    def pmf_for(c: int) -> dict[tuple[int, ...], Fraction]:
        if c not in by_count:
            by_count[c] = _convolve_pmf(pmf_for(c - 1), one_parent)
        return by_count[c]

    d = psi.d
    moves = WalkSpec(d).moves
    start = tuple(
        sorted(
            (tuple(int(c) for c in site), int(cnt))
            for site, cnt in (mu.items() if hasattr(mu, "items") else mu)
            if cnt
        )
    )

    def pair(field) -> float:
        return math.fsum(cnt * psi.at(site) for site, cnt in field)

    # layered sweep merging states with equal (field, accumulated pairing);
    # generations past `hi` never touch the pairing, so the sweep ends there
    states: dict[tuple, Fraction] = {(start, 0.0): Fraction(1)}
    spent = 0
    for t in range(hi + 1):
        if lo <= t:
            states = _merged(
                ((field, es + pair(field)), w) for (field, es), w in states.items()
            )
        if t == hi:
            break
        nxt: dict[tuple, Fraction] = {}
        for (field, es), weight in states.items():
            partial: dict[tuple, Fraction] = {(): weight}
            for origin, cnt in field:
                pmf = pmf_for(cnt)
                grown: dict[tuple, Fraction] = {}
                for arrivals, w in partial.items():
                    for vec, pv in pmf.items():
                        added = dict(arrivals)
                        for mv, c in zip(moves, vec):
                            if c:
                                site = tuple(o + m for o, m in zip(origin, mv))
                                added[site] = added.get(site, 0) + c
                        key = tuple(sorted(added.items()))
                        grown[key] = grown.get(key, Fraction(0)) + w * pv
                    spent += len(pmf)
                    if spent > state_budget:
                        raise CapacityError(
                            f"enumeration exceeded {state_budget} states; "
                            "shrink the horizon or the law"
                        )
                partial = grown
            for arrivals, w in partial.items():
                key = (tuple((s, c) for s, c in arrivals if c), es)
                nxt[key] = nxt.get(key, Fraction(0)) + w
        states = nxt
    return math.fsum(float(w) * math.exp(es) for (_, es), w in states.items())


def _merged(pairs) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}
    for key, w in pairs:
        out[key] = out.get(key, Fraction(0)) + w
    return out


# -- reporting -----------------------------------------------------------------


@dataclass
class MomentReport:
    """A small JSON-serializable record of exact-moment output."""

    kind: str
    d: int
    law_label: str
    params: dict
    values: dict

    def as_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "d": self.d,
                "law": self.law_label,
                "params": self.params,
                "values": self.values,
            },
            sort_keys=True,
        )
