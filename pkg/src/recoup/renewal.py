"""Renewal and quasi-renewal stream simulation with moment bounds.

A renewal stream is simulated by inverse-transform draws from an
:class:`~recoup.intensity.IntensitySpec`; the path object answers counting,
backward-time and forward-time queries at any time inside its horizon.

Quasi-renewal streams let every period carry its own hazard (possibly
history dependent) as long as it stays inside a fixed envelope band
``lower(s) <= hazard_j(s) <= upper(s)``.  Periods are sampled by thinning
against the upper envelope, which doubles as the enforcement probe: any
generated hazard leaving the band raises instead of being clamped.

The envelope band yields computable bounds on backward/forward-time
moments: the classical ``E B_t <= E xi^2 / E xi`` and its generalized form
``E B_t^l <= E eta^l + E eta^(l+1) / ((l+1) E zeta)`` where ``eta`` has the
lower-envelope law and ``zeta`` the upper-envelope law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EnvelopeViolationError, SpecViolationError
from .intensity import (
    CallableHazard,
    DistributionView,
    HazardModel,
    IntensitySpec,
    residual_distribution,
)

__all__ = [
    "RenewalPath",
    "RenewalClock",
    "QuasiRenewalSpec",
    "LordenBounds",
    "simulate_renewal",
    "simulate_quasi_renewal",
    "lorden_bound",
    "generalized_lorden_bound",
    "backward_time_survey",
    "sample_backward_times",
    "sample_quasi_backward_times",
    "stationary_law",
    "validate_quasi_renewal",
    "BackwardTimeSurvey",
]


@dataclass(frozen=True)
class RenewalPath:
    """One realized renewal stream.

    ``epochs`` holds the renewal times; the last epoch strictly exceeds the
    horizon so forward-time queries are answerable everywhere on it.  A
    delayed start is encoded by ``initial_elapsed``: the period spanning
    time zero began that long before zero.
    """

    epochs: np.ndarray
    initial_elapsed: float
    horizon: float

    def __post_init__(self):
        ep = np.asarray(self.epochs, dtype=float)
        if ep.ndim != 1 or len(ep) == 0:
            raise ValueError("a renewal path needs at least one epoch")
        if np.any(np.diff(ep) <= 0):
            raise SpecViolationError("renewal epochs must be strictly increasing")
        if ep[-1] <= self.horizon:
            raise ValueError("the final epoch must exceed the horizon")

    @property
    def periods(self) -> np.ndarray:
        """Durations of the spanning periods; the first includes the pre-zero part."""
        return np.diff(np.concatenate([[-self.initial_elapsed], self.epochs]))

    def clock(self) -> "RenewalClock":
        return RenewalClock(self)


class RenewalClock:
    """Counting / backward-time / forward-time queries over one path."""

    def __init__(self, path: RenewalPath):
        self.path = path
        self._epochs = np.asarray(path.epochs, dtype=float)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.path.horizon):
            raise ValueError("query times must lie in [0, horizon]")
        return t

    def count(self, t):
        """Number of renewals in [0, t]."""
        t = self._check(t)
        out = np.searchsorted(self._epochs, t, side="right")
        return int(out) if np.ndim(t) == 0 else out

    def backward(self, t):
        """Elapsed time since the last renewal (the full delay before the first)."""
        t = self._check(t)
        idx = np.searchsorted(self._epochs, t, side="right")
        prev = np.where(idx > 0, self._epochs[np.maximum(idx - 1, 0)],
                        -self.path.initial_elapsed)
        out = t - prev
        return float(out) if np.ndim(t) == 0 else out

    def forward(self, t):
        """Remaining time until the next renewal."""
        t = self._check(t)
        idx = np.searchsorted(self._epochs, t, side="right")
        out = self._epochs[idx] - t
        return float(out) if np.ndim(t) == 0 else out

    def spanning_period(self, t):
        return self.backward(t) + self.forward(t)


def _draw_periods(view: DistributionView, rng: np.random.Generator, size: int) -> np.ndarray:
    draws = np.atleast_1d(view.quantile(rng.random(size)))
    if np.any(draws <= 0):
        raise SpecViolationError("renewal periods must be strictly positive "
                                 "(the lifetime law puts mass at zero)")
    return draws


def simulate_renewal(spec: IntensitySpec, b: float, horizon: float,
                     rng: np.random.Generator) -> RenewalPath:
    """Simulate one renewal stream started with ``b`` time already elapsed.

    The first epoch is drawn from the residual law at ``b``; later epochs
    add i.i.d. full-period draws until the horizon is passed.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    res = residual_distribution(spec, b)
    first = float(res.quantile(rng.random()))
    view = spec.view
    epochs = [first]
    t = first
    mean = view.mean
    while t <= horizon:
        block = max(8, int((horizon - t) / max(mean, 1e-12) * 1.25) + 2)
        cs = t + np.cumsum(_draw_periods(view, rng, block))
        over = np.nonzero(cs > horizon)[0]
        if len(over):
            epochs.extend(cs[: over[0] + 1].tolist())
            t = float(cs[over[0]])
        else:
            epochs.extend(cs.tolist())
            t = float(cs[-1])
    return RenewalPath(np.asarray(epochs), float(b), float(horizon))


# ---------------------------------------------------------------------------
# Quasi-renewal streams
# ---------------------------------------------------------------------------

PeriodHazard = Callable[[float], float]
HazardGenerator = Callable[[int, tuple], PeriodHazard]


@dataclass(frozen=True)
class QuasiRenewalSpec:
    """Per-period hazards bracketed by an envelope band.

    ``period_hazard(j, history)`` returns the hazard function of period
    ``j`` (0-based) given the realized past period durations.  Every value
    it produces must stay inside ``[lower_envelope, upper_envelope]``;
    violations are raised during simulation, not clamped.
    """

    lower_envelope: IntensitySpec
    upper_envelope: IntensitySpec
    period_hazard: HazardGenerator
    delay: float = 0.0
    moment_order: int = 2

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.moment_order < 2:
            raise ValueError("moment_order must be >= 2")
        if self.lower_envelope.atoms or self.upper_envelope.atoms:
            raise SpecViolationError("envelope intensities must be atom free")


def validate_quasi_renewal(spec: QuasiRenewalSpec,
                           probe_points: int = 64) -> list[str]:
    """Numeric diagnostics for the envelope conditions; empty means clean."""
    diags: list[str] = []
    lo_view = spec.lower_envelope.view
    up_view = spec.upper_envelope.view
    try:
        lo_view.moment(spec.moment_order)
    except Exception:
        diags.append(
            f"lower-envelope moment integral of order {spec.moment_order} diverges")
    # bounded near zero
    near = np.linspace(0.0, 0.25, probe_points)
    up_rates = np.asarray(up_view.spec.model.rate(near), dtype=float)
    if not np.all(np.isfinite(up_rates)):
        diags.append("upper envelope is unbounded in a neighbourhood of zero")
    # strictly positive beyond the delay
    span = max(1.0, 2.0 * lo_view.mean)
    beyond = spec.delay + np.linspace(span / probe_points, span, probe_points)
    lo_rates = np.asarray(lo_view.spec.model.rate(beyond), dtype=float)
    if np.any(lo_rates <= 0):
        diags.append(f"lower envelope vanishes beyond the delay {spec.delay}")
    # band ordering spot check
    pts = np.linspace(0.0, span + spec.delay, probe_points)
    lo_r = np.asarray(lo_view.spec.model.rate(pts), dtype=float)
    up_r = np.asarray(up_view.spec.model.rate(pts), dtype=float)
    if np.any(lo_r > up_r * (1 + 1e-9) + 1e-12):
        diags.append("lower envelope exceeds upper envelope somewhere")
    return diags


def _invert_cum(model: HazardModel, target: float, start: float) -> float:
    """Smallest s >= start with cumulative hazard >= target."""
    if model.has_inverse:
        return float(np.asarray(model.inverse_cum(target)))
    lo, hi = start, max(2.0 * start, 1.0)
    while float(np.asarray(model.cum(hi))) < target:
        hi *= 2.0
        if hi > 1e300:
            raise SpecViolationError("upper-envelope cumulative hazard does not reach target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.asarray(model.cum(mid))) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return hi


def _draw_quasi_period(hazard: PeriodHazard, lower: IntensitySpec, upper: IntensitySpec,
                       j: int, rng: np.random.Generator) -> float:
    """One period from ``hazard`` by thinning against the upper envelope."""
    up_model = upper.model
    lo_model = lower.model
    s = 0.0
    cum = 0.0
    while True:
        cum += rng.exponential()
        s = _invert_cum(up_model, cum, s)
        lam = float(hazard(s))
        if np.isnan(lam) or lam < 0:
            raise SpecViolationError(f"period {j} hazard returned {lam!r} at s={s:.6g}")
        q = float(np.asarray(up_model.rate(s)))
        low = float(np.asarray(lo_model.rate(s)))
        if lam > q * (1 + 1e-9) + 1e-12:
            raise EnvelopeViolationError(
                f"period {j} hazard {lam:.6g} exceeds upper envelope {q:.6g} at s={s:.6g}",
                period_index=j, at=s)
        if lam < low * (1 - 1e-9) - 1e-12:
            raise EnvelopeViolationError(
                f"period {j} hazard {lam:.6g} below lower envelope {low:.6g} at s={s:.6g}",
                period_index=j, at=s)
        if q > 0 and rng.random() * q <= lam:
            return s


def simulate_quasi_renewal(spec: QuasiRenewalSpec, horizon: float,
                           rng: np.random.Generator) -> RenewalPath:
    """Simulate a quasi-renewal stream (pure start) up to ``horizon``."""
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    epochs: list[float] = []
    history: list[float] = []
    t = 0.0
    j = 0
    while t <= horizon:
        hazard = spec.period_hazard(j, tuple(history))
        period = _draw_quasi_period(hazard, spec.lower_envelope, spec.upper_envelope, j, rng)
        if period <= 0:
            raise SpecViolationError(f"period {j} came out nonpositive: {period}")
        t += period
        epochs.append(t)
        history.append(period)
        j += 1
    return RenewalPath(np.asarray(epochs), 0.0, float(horizon))


# ---------------------------------------------------------------------------
# Moment bounds
# ---------------------------------------------------------------------------


def lorden_bound(spec: IntensitySpec) -> float:
    """Uniform-in-time bound on the mean backward time: E xi^2 / E xi."""
    view = spec.view
    return view.moment(2) / view.moment(1)


@dataclass(frozen=True)
class LordenBounds:
    """Envelope-law moment bounds for backward/forward times of orders 1..order."""

    order: int
    values: tuple[float, ...]        # bound for E B_t^l, l = 1..order
    eta_moments: tuple[float, ...]   # lower-envelope law moments 1..order+1
    zeta_mean: float                 # upper-envelope law mean

    def bound(self, ell: int) -> float:
        return self.values[ell - 1]


def generalized_lorden_bound(spec: QuasiRenewalSpec, ell: int) -> LordenBounds:
    """Backward-time moment bounds from the envelope band.

    For each order ``l <= ell`` the bound is
    ``E eta^l + E eta^(l+1) / ((l+1) E zeta)`` with ``eta`` distributed by
    the lower envelope and ``zeta`` by the upper envelope.  Requires
    ``ell <= moment_order - 1``.
    """
    if not 1 <= ell <= spec.moment_order - 1:
        raise ValueError(
            f"bound order {ell} needs moment_order >= {ell + 1}, spec has {spec.moment_order}")
    eta = spec.lower_envelope.view
    zeta_mean = spec.upper_envelope.view.moment(1)
    if zeta_mean <= 0:
        raise SpecViolationError("upper-envelope law has zero mean")
    eta_moments = tuple(eta.moment(k) for k in range(1, ell + 2))
    values = tuple(eta_moments[l - 1] + eta_moments[l] / ((l + 1) * zeta_mean)
                   for l in range(1, ell + 1))
    return LordenBounds(order=ell, values=values, eta_moments=eta_moments,
                        zeta_mean=zeta_mean)


# ---------------------------------------------------------------------------
# Surveys of the backward-time law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BackwardTimeSurvey:
    """Backward/forward-time samples across replications at fixed times."""

    t_grid: np.ndarray
    backward: np.ndarray   # shape (replications, len(t_grid))
    forward: np.ndarray    # same shape

    @property
    def replications(self) -> int:
        return self.backward.shape[0]

    def moment(self, ell: int = 1, forward: bool = False) -> np.ndarray:
        x = (self.forward if forward else self.backward) ** ell
        return x.mean(axis=0)

    def moment_se(self, ell: int = 1, forward: bool = False) -> np.ndarray:
        x = (self.forward if forward else self.backward) ** ell
        return x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])

    def histogram(self, t_index: int, bins=64):
        return np.histogram(self.backward[:, t_index], bins=bins, density=True)


def backward_time_survey(paths: Sequence[RenewalPath], t_grid) -> BackwardTimeSurvey:
    """Collect B_t / W_t samples from already simulated paths."""
    grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("the time grid must be strictly increasing")
    short = [p for p in paths if p.horizon < grid[-1]]
    if short:
        raise ValueError(
            f"{len(short)} paths have horizon below the largest grid time {grid[-1]}")
    B = np.empty((len(paths), len(grid)))
    W = np.empty_like(B)
    for i, p in enumerate(paths):
        clock = p.clock()
        B[i] = clock.backward(grid)
        W[i] = clock.forward(grid)
    return BackwardTimeSurvey(grid, B, W)


def sample_backward_times(spec: IntensitySpec, b: float, t_grid, n: int,
                          rng: np.random.Generator) -> BackwardTimeSurvey:
    """Vectorized batch equivalent of surveying ``n`` fresh renewal paths."""
    grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("the time grid must be strictly increasing")
    res = residual_distribution(spec, b)
    view = spec.view
    cur = np.atleast_1d(res.quantile(rng.random(n))).astype(float)
    prev = np.full(n, -float(b))
    B = np.empty((n, len(grid)))
    W = np.empty_like(B)
    for k, t in enumerate(grid):
        while True:
            m = cur <= t
            if not m.any():
                break
            prev[m] = cur[m]
            cur[m] = cur[m] + _draw_periods(view, rng, int(m.sum()))
        B[:, k] = t - prev
        W[:, k] = cur - t
    return BackwardTimeSurvey(grid, B, W)


def sample_quasi_backward_times(spec: QuasiRenewalSpec, t_grid, n: int,
                                rng: np.random.Generator) -> BackwardTimeSurvey:
    """Backward/forward-time samples of a quasi-renewal stream at grid times."""
    grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("the time grid must be strictly increasing")
    t_max = float(grid[-1])
    B = np.empty((n, len(grid)))
    W = np.empty_like(B)
    for i in range(n):
        t = 0.0
        history: list[float] = []
        j = 0
        k = 0
        while k < len(grid):
            hazard = spec.period_hazard(j, tuple(history))
            period = _draw_quasi_period(hazard, spec.lower_envelope,
                                        spec.upper_envelope, j, rng)
            t_new = t + period
            while k < len(grid) and t <= grid[k] < t_new:
                B[i, k] = grid[k] - t
                W[i, k] = t_new - grid[k]
                k += 1
            history.append(period)
            t = t_new
            j += 1
    return BackwardTimeSurvey(grid, B, W)


def stationary_law(spec: IntensitySpec) -> DistributionView:
    """Long-run law of the backward time: CDF (1/E xi) * int_0^x survival."""
    view = spec.view
    mean = view.moment(1)
    return IntensitySpec(_StationaryHazard(view, mean),
                         support_hint=spec.support_hint, _skip_probe=True).view


class _StationaryHazard(HazardModel):
    """Hazard of the integrated-survival law derived from a base view."""

    has_inverse = False

    def __init__(self, base_view: DistributionView, mean: float):
        self._base = base_view
        self._mean = mean
        breaks = [a.location for a in base_view.spec.atoms]
        if base_view.spec.support_hint:
            breaks.append(base_view.spec.support_hint)
        self._integ = CallableHazard(lambda s: float(base_view.survival(s)),
                                     breakpoints=breaks)

    def _one(self, s: float, want_rate: bool) -> float:
        left = self._mean - float(self._integ.cum(s))
        if left <= 1e-15 * self._mean:
            return float("inf")
        if want_rate:
            return float(self._base.survival(s)) / left
        return -np.log(left / self._mean)

    def rate(self, s):
        if np.ndim(s) == 0:
            return self._one(float(s), True)
        return np.array([self._one(float(x), True) for x in np.ravel(s)]).reshape(np.shape(s))

    def cum(self, s):
        if np.ndim(s) == 0:
            return self._one(float(s), False)
        return np.array([self._one(float(x), False) for x in np.ravel(s)]).reshape(np.shape(s))
