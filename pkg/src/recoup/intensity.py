"""Lifetime distributions driven by (generalized) intensity functions.

A nonnegative lifetime law is specified by its hazard rate ``lambda(s)``
(the absolutely continuous part of the intensity) plus a finite ordered
list of atoms, the jump points of the CDF.  Between atoms the survival
function decays as ``exp(-int lambda)``; at an atom of mass ``q`` the
survival drops by exactly ``q``, i.e. survival is multiplied by
``1 - q / S(a-)``.  Admissibility (total intensity mass diverges, so the
CDF reaches 1) is probed numerically at construction.

Built-in hazard families (constant, piecewise-linear table, exponential,
uniform, gamma, weibull) carry analytic cumulative hazards and inverses,
so CDF evaluation, quantiles and sampling are exact and vectorized.
Arbitrary hazard callables fall back to cached adaptive quadrature and
bracketed bisection.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate
from scipy import stats as sps

from .errors import (
    AdmissibilityError,
    ConditioningError,
    InfiniteMomentError,
    SpecViolationError,
)

__all__ = [
    "Atom",
    "IntensitySpec",
    "DistributionView",
    "exponential",
    "uniform",
    "gamma",
    "weibull",
    "rayleigh",
    "constant_hazard",
    "table_hazard",
    "from_hazard",
    "deterministic",
    "cdf",
    "quantile",
    "sample",
    "moment",
    "residual_distribution",
    "common_part",
    "common_part_inf",
    "common_part_n",
]

# exp(-_LOG_TINY) underflows to 0.0; cumulative hazards at or above this
# are treated as "survival exhausted".
_LOG_TINY = 745.0
_TAIL_SURVIVAL = 1e-12
_ADMISSIBILITY_SURVIVAL = 1e-9
_MAX_DOUBLINGS = 60
_QUANTILE_ATOL = 1e-10
_MOMENT_RTOL = 1e-6


@dataclass(frozen=True)
class Atom:
    """A CDF jump: probability mass ``mass`` sitting at time ``location``."""

    location: float
    mass: float


ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# Hazard models: rate(s), cumulative hazard cum(s) = int_0^s rate, and an
# optional analytic inverse of the cumulative hazard.
# ---------------------------------------------------------------------------


class HazardModel:
    """Hazard rate with (optionally analytic) cumulative hazard."""

    has_inverse = False

    def rate(self, s: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def cum(self, s: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def inverse_cum(self, h: ArrayLike) -> ArrayLike:
        raise NotImplementedError


class ConstantHazard(HazardModel):
    has_inverse = True

    def __init__(self, rate: float):
        if not rate >= 0:
            raise SpecViolationError(f"constant hazard must be >= 0, got {rate}")
        self._rate = float(rate)
        self.has_inverse = rate > 0

    def rate(self, s):
        return np.full_like(np.asarray(s, dtype=float), self._rate) if np.ndim(s) else self._rate

    def cum(self, s):
        return self._rate * np.asarray(s, dtype=float) if np.ndim(s) else self._rate * s

    def inverse_cum(self, h):
        return np.asarray(h, dtype=float) / self._rate if np.ndim(h) else h / self._rate


class UniformHazard(HazardModel):
    """Hazard of a lifetime uniform on [lo, hi]: 1 / (hi - s) on [lo, hi)."""

    has_inverse = True

    def __init__(self, lo: float, hi: float):
        if not (0 <= lo < hi):
            raise SpecViolationError(f"uniform support needs 0 <= lo < hi, got [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self._width = self.hi - self.lo

    def rate(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(s < self.lo, 0.0, np.where(s < self.hi, 1.0 / (self.hi - s), np.inf))
        return out if out.ndim else float(out)

    def cum(self, s):
        s = np.asarray(s, dtype=float)
        frac = np.clip((self.hi - s) / self._width, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            out = np.where(s < self.lo, 0.0, -np.log(frac))
        return out if out.ndim else float(out)

    def inverse_cum(self, h):
        h = np.asarray(h, dtype=float)
        out = self.hi - self._width * np.exp(-h)
        return out if out.ndim else float(out)


class WeibullHazard(HazardModel):
    """Hazard (k/c) * (s/c)^(k-1); shape 2, scale 1 gives the 2s ramp."""

    has_inverse = True

    def __init__(self, shape: float, scale: float = 1.0):
        if shape <= 0 or scale <= 0:
            raise SpecViolationError("weibull shape and scale must be positive")
        self.shape = float(shape)
        self.scale = float(scale)

    def rate(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            out = (self.shape / self.scale) * (s / self.scale) ** (self.shape - 1.0)
        return out if out.ndim else float(out)

    def cum(self, s):
        s = np.asarray(s, dtype=float)
        out = (s / self.scale) ** self.shape
        return out if out.ndim else float(out)

    def inverse_cum(self, h):
        h = np.asarray(h, dtype=float)
        out = self.scale * h ** (1.0 / self.shape)
        return out if out.ndim else float(out)


class GammaHazard(HazardModel):
    has_inverse = True

    def __init__(self, shape: float, rate: float = 1.0):
        if shape <= 0 or rate <= 0:
            raise SpecViolationError("gamma shape and rate must be positive")
        self.shape = float(shape)
        self.rate_param = float(rate)
        self._dist = sps.gamma(a=self.shape, scale=1.0 / self.rate_param)

    def rate(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(self._dist.logpdf(s) - self._dist.logsf(s))
        # far in the tail the hazard approaches the rate parameter
        out = np.where(np.isfinite(out), out, self.rate_param)
        return out if out.ndim else float(out)

    def cum(self, s):
        s = np.asarray(s, dtype=float)
        out = -self._dist.logsf(s)
        return out if out.ndim else float(out)

    def inverse_cum(self, h):
        h = np.asarray(h, dtype=float)
        out = self._dist.isf(np.exp(-h))
        return out if out.ndim else float(out)


class TableHazard(HazardModel):
    """Piecewise-linear hazard through (s, rate) knots, constant beyond the last."""

    has_inverse = True

    def __init__(self, knots: Sequence[tuple[float, float]]):
        pts = [(float(s), float(r)) for s, r in knots]
        if not pts:
            raise SpecViolationError("table hazard needs at least one knot")
        s_vals = [p[0] for p in pts]
        if any(b <= a for a, b in zip(s_vals, s_vals[1:])):
            raise SpecViolationError("table hazard knots must have strictly increasing times")
        if s_vals[0] < 0:
            raise SpecViolationError("table hazard knots must start at time >= 0")
        if any(p[1] < 0 for p in pts):
            raise SpecViolationError("table hazard rates must be >= 0")
        if s_vals[0] > 0:
            pts.insert(0, (0.0, pts[0][1]))
        self._s = np.array([p[0] for p in pts])
        self._r = np.array([p[1] for p in pts])
        # exact cumulative integral at knots (trapezoid is exact for linear pieces)
        gaps = np.diff(self._s)
        self._cum = np.concatenate([[0.0], np.cumsum(gaps * (self._r[:-1] + self._r[1:]) / 2.0)])
        self.has_inverse = self._r[-1] > 0

    def rate(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self._s, self._r)
        return out if out.ndim else float(out)

    def cum(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self._s, s, side="right") - 1, 0, len(self._s) - 1)
        s0 = self._s[idx]
        r0 = self._r[idx]
        d = np.maximum(s - s0, 0.0)
        last = idx == len(self._s) - 1
        slope = np.where(last, 0.0, (np.take(self._r, np.minimum(idx + 1, len(self._r) - 1)) - r0)
                         / np.where(last, 1.0, np.take(self._s, np.minimum(idx + 1, len(self._s) - 1)) - s0))
        out = self._cum[idx] + r0 * d + 0.5 * slope * d * d
        return out if out.ndim else float(out)

    def _inverse_scalar(self, h: float) -> float:
        if h <= 0:
            return 0.0
        idx = min(bisect.bisect_right(self._cum.tolist(), h) - 1, len(self._s) - 1)
        s0, r0, c0 = self._s[idx], self._r[idx], self._cum[idx]
        need = h - c0
        if idx == len(self._s) - 1:
            if self._r[-1] <= 0:
                raise SpecViolationError("cumulative hazard plateau: target not reachable")
            return float(s0 + need / self._r[-1])
        slope = (self._r[idx + 1] - r0) / (self._s[idx + 1] - s0)
        if abs(slope) < 1e-300:
            return float(s0 + need / r0)
        disc = r0 * r0 + 2.0 * slope * need
        return float(s0 + (math.sqrt(max(disc, 0.0)) - r0) / slope)

    def inverse_cum(self, h):
        if np.ndim(h) == 0:
            return self._inverse_scalar(float(h))
        return np.array([self._inverse_scalar(float(x)) for x in np.ravel(h)]).reshape(np.shape(h))


class ShiftedHazard(HazardModel):
    """Hazard of the remaining life after ``offset`` elapsed: base rate shifted."""

    def __init__(self, base: HazardModel, offset: float):
        self.base = base
        self.offset = float(offset)
        self._h0 = float(np.asarray(base.cum(self.offset), dtype=float))
        self.has_inverse = base.has_inverse

    def rate(self, s):
        return self.base.rate(np.asarray(s) + self.offset if np.ndim(s) else s + self.offset)

    def cum(self, s):
        s_abs = np.asarray(s) + self.offset if np.ndim(s) else s + self.offset
        out = self.base.cum(s_abs) - self._h0
        return out

    def inverse_cum(self, h):
        out = self.base.inverse_cum(h + self._h0)
        return out - self.offset


class CallableHazard(HazardModel):
    """User-supplied hazard callable; cumulative hazard by cached quadrature."""

    has_inverse = False

    def __init__(self, fn: Callable[[float], float],
                 cumulative: Optional[Callable[[float], float]] = None,
                 breakpoints: Sequence[float] = ()):
        self._fn = fn
        self._cumulative = cumulative
        self._breaks = sorted(float(b) for b in breakpoints if b > 0)
        self._anchor_s = [0.0]
        self._anchor_h = [0.0]
        self.has_inverse = False

    def rate(self, s):
        if np.ndim(s) == 0:
            v = float(self._fn(float(s)))
            if math.isnan(v) or v < 0:
                raise SpecViolationError(f"hazard sample at s={s!r} is {v!r} (must be >= 0)")
            return v
        flat = [self.rate(float(x)) for x in np.ravel(s)]
        return np.array(flat).reshape(np.shape(s))

    def _quad_piece(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        total = 0.0
        cuts = [p for p in self._breaks if a < p < b] + [b]
        lo = a
        for hi in cuts:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, _ = integrate.quad(self.rate, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
            if math.isnan(val):
                raise SpecViolationError(f"hazard not integrable on [{lo}, {hi}]")
            total += val
            lo = hi
        return total

    def _cum_scalar(self, s: float) -> float:
        if self._cumulative is not None:
            return float(self._cumulative(s))
        if s <= 0:
            return 0.0
        i = bisect.bisect_right(self._anchor_s, s) - 1
        base_s, base_h = self._anchor_s[i], self._anchor_h[i]
        if base_h >= _LOG_TINY:
            return base_h
        h = base_h + self._quad_piece(base_s, s)
        if len(self._anchor_s) < 4096:
            j = bisect.bisect_left(self._anchor_s, s)
            if j >= len(self._anchor_s) or self._anchor_s[j] != s:
                self._anchor_s.insert(j, s)
                self._anchor_h.insert(j, h)
        return h

    def cum(self, s):
        if np.ndim(s) == 0:
            return self._cum_scalar(float(s))
        return np.array([self._cum_scalar(float(x)) for x in np.ravel(s)]).reshape(np.shape(s))


# ---------------------------------------------------------------------------
# Specs and views
# ---------------------------------------------------------------------------


def _normalize_atoms(atoms) -> tuple[Atom, ...]:
    out = []
    for a in atoms:
        if not isinstance(a, Atom):
            a = Atom(float(a[0]), float(a[1]))
        if a.location < 0:
            raise SpecViolationError(f"atom location must be >= 0, got {a.location}")
        if not (0 < a.mass <= 1):
            raise SpecViolationError(f"atom mass must lie in (0, 1], got {a.mass}")
        out.append(a)
    locs = [a.location for a in out]
    if any(b <= a for a, b in zip(locs, locs[1:])):
        raise SpecViolationError("atom locations must be strictly increasing")
    if sum(a.mass for a in out) > 1 + 1e-12:
        raise SpecViolationError("atom masses sum above 1")
    return tuple(out)


class IntensitySpec:
    """A lifetime law held as hazard rate + atoms.

    Parameters
    ----------
    continuous_hazard : callable or HazardModel
        The absolutely continuous intensity ``s -> rate >= 0``.
    atoms : sequence of (location, mass) or Atom
        Jump points of the CDF, strictly increasing locations.
    support_hint : float, optional
        Upper truncation aid for quadrature on compact-support laws.
    """

    def __init__(self, continuous_hazard, atoms=(), support_hint: Optional[float] = None,
                 *, _skip_probe: bool = False):
        if isinstance(continuous_hazard, HazardModel):
            self.model = continuous_hazard
        elif callable(continuous_hazard):
            self.model = CallableHazard(
                continuous_hazard,
                breakpoints=[a[0] if not isinstance(a, Atom) else a.location for a in atoms]
                + ([support_hint] if support_hint else []),
            )
        else:
            raise TypeError("continuous_hazard must be callable or a HazardModel")
        self.atoms = _normalize_atoms(atoms)
        self.support_hint = None if support_hint is None else float(support_hint)
        self._view = DistributionView(self)
        if not _skip_probe:
            self._view._probe_admissibility()

    @property
    def continuous_hazard(self) -> Callable[[ArrayLike], ArrayLike]:
        return self.model.rate

    @property
    def view(self) -> "DistributionView":
        return self._view

    def __repr__(self):
        return (f"IntensitySpec({type(self.model).__name__}, atoms={len(self.atoms)}, "
                f"support_hint={self.support_hint})")


class DistributionView:
    """CDF / survival / density / quantile surface derived from an IntensitySpec."""

    def __init__(self, spec: IntensitySpec):
        self.spec = spec
        self._model = spec.model
        self._atom_locs = np.array([a.location for a in spec.atoms])
        self._atom_masses = np.array([a.mass for a in spec.atoms])
        # survival just before each atom, jump factors, and running prefix products
        factors = []
        prefix = [1.0]
        for loc, mass in zip(self._atom_locs, self._atom_masses):
            s_before = math.exp(-min(float(np.asarray(self._model.cum(loc))), _LOG_TINY)) * prefix[-1]
            if s_before < mass - 1e-12:
                raise SpecViolationError(
                    f"atom at {loc} carries mass {mass} but only {s_before:.3e} survival remains")
            factor = max(s_before - mass, 0.0) / s_before if s_before > 0 else 0.0
            factors.append(factor)
            prefix.append(prefix[-1] * factor)
        self._prefix = np.array(prefix)  # len = n_atoms + 1
        self._surv_before = np.array([
            math.exp(-min(float(np.asarray(self._model.cum(loc))), _LOG_TINY)) * self._prefix[i]
            for i, loc in enumerate(self._atom_locs)])
        self._atom_u_lo = 1.0 - self._surv_before
        self._atom_u_hi = self._atom_u_lo + self._atom_masses
        self._probe_end: Optional[float] = None

    # -- basic surfaces ----------------------------------------------------

    @property
    def atoms(self) -> tuple[Atom, ...]:
        return self.spec.atoms

    def survival(self, s: ArrayLike) -> ArrayLike:
        scalar = np.ndim(s) == 0
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        h = np.asarray(self._model.cum(s_arr), dtype=float)
        with np.errstate(over="ignore"):
            base = np.where(h >= _LOG_TINY, 0.0, np.exp(-np.minimum(h, _LOG_TINY)))
        k = np.searchsorted(self._atom_locs, s_arr, side="right")
        out = np.where(s_arr < 0, 1.0, base * self._prefix[k])
        return float(out[0]) if scalar else out.reshape(np.shape(s))

    def cdf(self, s: ArrayLike) -> ArrayLike:
        return 1.0 - self.survival(s)

    def density(self, s: ArrayLike) -> ArrayLike:
        """Absolutely continuous density part, ``rate * survival``."""
        scalar = np.ndim(s) == 0
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        rate = np.asarray(self._model.rate(s_arr), dtype=float)
        surv = np.asarray(self.survival(s_arr), dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.where(surv > 0, rate * surv, 0.0)
        return float(out[0]) if scalar else out.reshape(np.shape(s))

    def atom_mass_at(self, x: float) -> float:
        """Exact point mass at x (0 off atom locations)."""
        i = np.searchsorted(self._atom_locs, x)
        if i < len(self._atom_locs) and self._atom_locs[i] == x:
            return float(self._atom_masses[i])
        return 0.0

    # -- admissibility / support probing ------------------------------------

    def _probe_admissibility(self) -> float:
        """Find a horizon where survival < 1e-9; error out if none exists."""
        start = max(1.0, self.spec.support_hint or 0.0,
                    float(self._atom_locs[-1]) if len(self._atom_locs) else 0.0)
        h = start
        for _ in range(_MAX_DOUBLINGS):
            if self.survival(h) < _ADMISSIBILITY_SURVIVAL:
                self._probe_end = h
                return h
            h *= 2.0
        raise AdmissibilityError(
            f"intensity admissibility failed: survival still {self.survival(h):.3e} at s={h:.3e}; "
            "the total intensity mass must diverge")

    def _tail_end(self, level: float = _TAIL_SURVIVAL) -> float:
        h = self._probe_end or self._probe_admissibility()
        for _ in range(_MAX_DOUBLINGS):
            if self.survival(h) < level:
                return h
            h *= 2.0
        raise AdmissibilityError(f"survival does not fall below {level} within probe range")

    # -- quantiles and sampling ---------------------------------------------

    def _quantile_scalar(self, u: float) -> float:
        if not 0.0 <= u < 1.0:
            raise ValueError(f"quantile argument must lie in [0, 1), got {u}")
        # atom plateaus
        i = np.searchsorted(self._atom_u_lo, u, side="right") - 1
        if i >= 0 and u < self._atom_u_hi[i]:
            return float(self._atom_locs[i])
        k = int(np.searchsorted(self._atom_u_hi, u, side="right"))
        target_h = math.log(self._prefix[k]) - math.log1p(-u)
        seg_lo = float(self._atom_locs[k - 1]) if k > 0 else 0.0
        if self._model.has_inverse:
            return max(float(np.asarray(self._model.inverse_cum(target_h))), seg_lo)
        # bracket then bisect on the cdf
        hi = float(self._atom_locs[k]) if k < len(self._atom_locs) else None
        if hi is None:
            hi = max(seg_lo, 1.0)
            while self.cdf(hi) < u:
                hi *= 2.0
                if hi > 1e300:
                    raise AdmissibilityError("quantile bracket diverged")
        lo = seg_lo
        while hi - lo > _QUANTILE_ATOL:
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    def quantile(self, u: ArrayLike) -> ArrayLike:
        """Generalized inverse CDF, inf{s : F(s) >= u}."""
        if np.ndim(u) == 0:
            return self._quantile_scalar(float(u))
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr < 0) | (u_arr >= 1)):
            raise ValueError("quantile arguments must lie in [0, 1)")
        if self._model.has_inverse:
            flat = u_arr.ravel()
            out = np.empty_like(flat)
            i = np.searchsorted(self._atom_u_lo, flat, side="right") - 1
            in_atom = np.zeros(flat.shape, dtype=bool)
            valid = i >= 0
            in_atom[valid] = flat[valid] < self._atom_u_hi[i[valid]]
            out[in_atom] = self._atom_locs[i[in_atom]]
            rest = ~in_atom
            if np.any(rest):
                k = np.searchsorted(self._atom_u_hi, flat[rest], side="right")
                target = np.log(self._prefix[k]) - np.log1p(-flat[rest])
                seg_lo = np.where(k > 0, np.concatenate([[0.0], self._atom_locs])[k], 0.0)
                out[rest] = np.maximum(np.asarray(self._model.inverse_cum(target)), seg_lo)
            return out.reshape(u_arr.shape)
        return np.array([self._quantile_scalar(float(x)) for x in u_arr.ravel()]).reshape(u_arr.shape)

    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        """Inverse-transform draws from this law using the caller's stream."""
        return self.quantile(rng.random() if size is None else rng.random(size))

    # -- moments -------------------------------------------------------------

    def moment(self, k: int) -> float:
        """E xi^k = k * int x^(k-1) * survival(x) dx, atoms handled exactly."""
        if not (isinstance(k, (int, np.integer)) and k >= 1):
            raise ValueError(f"moment order must be a positive integer, got {k!r}")
        k = int(k)

        def g(x):
            return k * x ** (k - 1) * self.survival(x)

        breaks = [0.0] + [a.location for a in self.spec.atoms]
        if self.spec.support_hint:
            breaks.append(self.spec.support_hint)
        breaks = sorted(set(breaks))
        total = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in zip(breaks, breaks[1:]):
                val, _ = integrate.quad(g, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=200)
                total += val
            h = breaks[-1]
            nxt = max(2.0 * h, 1.0)
            for _ in range(_MAX_DOUBLINGS):
                val, _ = integrate.quad(g, h, nxt, epsabs=1e-14, epsrel=1e-9, limit=200)
                total += val
                h, nxt = nxt, 2.0 * nxt
                if self.survival(h) < _TAIL_SURVIVAL and abs(val) <= _MOMENT_RTOL * max(abs(total), 1e-300):
                    return total
        raise InfiniteMomentError(
            f"moment of order {k} did not converge within the probe horizon (last tail term {val:.3e})")

    @cached_property
    def mean(self) -> float:
        return self.moment(1)


def _as_view(obj: Union[IntensitySpec, DistributionView]) -> DistributionView:
    return obj if isinstance(obj, DistributionView) else obj.view


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def exponential(rate: float, atoms=(), support_hint=None) -> IntensitySpec:
    """Constant-hazard (exponential) lifetime."""
    return IntensitySpec(ConstantHazard(rate), atoms=atoms, support_hint=support_hint)


constant_hazard = exponential


def uniform(lo: float = 0.0, hi: float = 1.0, atoms=()) -> IntensitySpec:
    """Lifetime uniform on [lo, hi], represented through its hazard 1/(hi-s)."""
    return IntensitySpec(UniformHazard(lo, hi), atoms=atoms, support_hint=hi)


def gamma(shape: float, rate: float = 1.0, atoms=()) -> IntensitySpec:
    return IntensitySpec(GammaHazard(shape, rate), atoms=atoms)


def weibull(shape: float, scale: float = 1.0, atoms=()) -> IntensitySpec:
    return IntensitySpec(WeibullHazard(shape, scale), atoms=atoms)


def rayleigh(scale: float = 1.0, atoms=()) -> IntensitySpec:
    """Linearly increasing hazard 2s/scale^2 (weibull shape 2)."""
    return IntensitySpec(WeibullHazard(2.0, scale), atoms=atoms)


def table_hazard(knots: Sequence[tuple[float, float]], atoms=(), support_hint=None) -> IntensitySpec:
    return IntensitySpec(TableHazard(knots), atoms=atoms, support_hint=support_hint)


def from_hazard(fn: Callable[[float], float], cumulative=None, atoms=(),
                support_hint=None) -> IntensitySpec:
    """Wrap an arbitrary hazard callable; cumulative hazard may be supplied."""
    model = CallableHazard(fn, cumulative=cumulative,
                           breakpoints=[getattr(a, "location", a[0]) for a in atoms]
                           + ([support_hint] if support_hint else []))
    return IntensitySpec(model, atoms=atoms, support_hint=support_hint)


def deterministic(at: float) -> IntensitySpec:
    """Lifetime equal to ``at`` with probability one."""
    return IntensitySpec(ConstantHazard(0.0), atoms=[(at, 1.0)], support_hint=at)


# ---------------------------------------------------------------------------
# Module-level operations (spec or view in, plain values out)
# ---------------------------------------------------------------------------


def cdf(spec: Union[IntensitySpec, DistributionView], s: ArrayLike) -> ArrayLike:
    return _as_view(spec).cdf(s)


def quantile(spec: Union[IntensitySpec, DistributionView], u: ArrayLike) -> ArrayLike:
    return _as_view(spec).quantile(u)


def sample(spec: Union[IntensitySpec, DistributionView], rng: np.random.Generator,
           size=None) -> ArrayLike:
    return _as_view(spec).sample(rng, size=size)


def moment(spec: Union[IntensitySpec, DistributionView], k: int) -> float:
    return _as_view(spec).moment(k)


def residual_distribution(spec: Union[IntensitySpec, DistributionView],
                          a: float) -> DistributionView:
    """Law of the remaining life given ``a`` elapsed: hazard shifted by ``a``."""
    view = _as_view(spec)
    base_spec = view.spec
    if a < 0:
        raise ValueError(f"elapsed time must be >= 0, got {a}")
    if a == 0:
        return view
    s_a = view.survival(a)
    if s_a <= 0:
        raise ConditioningError(f"elapsed time {a} is beyond the support (F(a) = 1)")
    shifted_atoms = [Atom(at.location - a, min(at.mass / s_a, 1.0))
                     for at in base_spec.atoms if at.location > a]
    hint = None if base_spec.support_hint is None else max(base_spec.support_hint - a, 0.0)
    res = IntensitySpec(ShiftedHazard(base_spec.model, a), atoms=shifted_atoms,
                        support_hint=hint, _skip_probe=True)
    return res.view


def _common_part_views(views: Sequence[DistributionView], tol: float = 1e-9) -> float:
    """Integral of the pointwise minimum density, plus coinciding point masses."""
    def integrand(x):
        return min(v.density(x) for v in views)

    breaks = {0.0}
    for v in views:
        breaks.update(float(a.location) for a in v.atoms)
        if v.spec.support_hint:
            breaks.add(float(v.spec.support_hint))
    horizon = min(v._tail_end() for v in views)
    breaks = sorted(b for b in breaks if 0.0 <= b < horizon) + [horizon]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(breaks, breaks[1:]):
            val, _ = integrate.quad(integrand, lo, hi, epsabs=tol, epsrel=1e-8, limit=200)
            total += val
    # atoms contribute the min of point masses at exactly matching locations
    if all(len(v.atoms) for v in views):
        first = views[0]
        for at in first.atoms:
            masses = [at.mass]
            for v in views[1:]:
                m = v.atom_mass_at(at.location)
                if m == 0.0:
                    break
                masses.append(m)
            else:
                total += min(masses)
    return min(total, 1.0)


def common_part(spec: Union[IntensitySpec, DistributionView], a: float) -> float:
    """Overlap mass between the law and its own residual law at elapsed ``a``.

    This is the certified meet probability when the two are maximally coupled.
    """
    view = _as_view(spec)
    if a == 0:
        return 1.0
    return _common_part_views([view, residual_distribution(view, a)])


def common_part_n(views: Sequence[Union[IntensitySpec, DistributionView]]) -> float:
    """Overlap mass of n laws: integral of the pointwise minimum density."""
    vs = [_as_view(v) for v in views]
    if len(vs) < 2:
        raise ValueError("need at least two laws")
    return _common_part_views(vs)


def _golden_min(fn: Callable[[float], float], lo: float, hi: float,
                iters: int = 24) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def common_part_inf(spec: Union[IntensitySpec, DistributionView], theta: float,
                    n_grid: int = 256) -> float:
    """Lower envelope of the overlap mass over elapsed times in [0, theta].

    Probes a uniform grid and then golden-section refines around the three
    smallest probes.  A zero return means the overlap degenerates somewhere
    on the range and no meet probability can be certified.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    view = _as_view(spec)
    grid = np.linspace(0.0, theta, n_grid)
    vals = np.array([common_part(view, float(a)) for a in grid])
    best = float(vals.min())
    for idx in np.argsort(vals)[:3]:
        lo = grid[max(int(idx) - 1, 0)]
        hi = grid[min(int(idx) + 1, n_grid - 1)]
        if hi > lo:
            _, fmin = _golden_min(lambda a: common_part(view, a), lo, hi)
            best = min(best, fmin)
    return max(best, 0.0)
