"""Maximal coupling of lifetimes and paired backward-time processes.

Two layers live here.  The lifetime layer couples finitely many laws so
that all coordinates take one common value with the largest possible
probability (the overlap mass of the laws) while each marginal stays
exact.  The process layer runs two renewal streams from different
elapsed-time starts and, at renewal epochs of the first stream, jointly
redraws the first stream's next period and the second stream's residual
so that with a certified probability both streams renew simultaneously
and merge.  The first simultaneous renewal is the coupling epoch; its
moments produce explicit total-variation convergence bounds ``C / t^l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, CouplingUnboundedError, SpecViolationError
from .intensity import (
    DistributionView,
    IntensitySpec,
    _as_view,
    common_part_inf,
    common_part_n,
    moment,
    residual_distribution,
)
from .renewal import lorden_bound, sample_backward_times, stationary_law

__all__ = [
    "MaximalCouple",
    "maximal_couple",
    "CouplingConfig",
    "CouplingConstants",
    "coupling_constants",
    "CoupleRun",
    "couple_once",
    "successful_coupling",
    "CouplingBound",
    "coupling_epoch_moment_bound",
    "tv_bound_curve",
    "stationary_integrated_bound",
    "empirical_tv",
    "empirical_tv_vs_law",
    "CouplingReport",
    "coupling_report",
]


# ---------------------------------------------------------------------------
# Lifetime-level maximal coupling
# ---------------------------------------------------------------------------


class MaximalCouple:
    """Joint sampler for n lifetime laws meeting with their overlap probability.

    A draw proposes from the first law; with probability equal to the
    pointwise-minimum mass at the proposal, every coordinate takes that
    value.  Otherwise each remaining coordinate is drawn from its residual
    (law minus overlap) by rejection.  Marginals are preserved exactly.
    """

    def __init__(self, views: Sequence[Union[IntensitySpec, DistributionView]],
                 rejection_cap: int = 100_000):
        if len(views) < 2:
            raise ValueError("need at least two laws to couple")
        self.views = [_as_view(v) for v in views]
        self.rejection_cap = rejection_cap

    @cached_property
    def kappa(self) -> float:
        """Certified meet probability: overlap mass of the marginals."""
        return common_part_n(self.views)

    def _weights(self, x: float, atomic: bool) -> list[float]:
        if atomic:
            return [v.atom_mass_at(x) for v in self.views]
        return [float(v.density(x)) for v in self.views]

    def draw(self, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
        """One joint draw; returns (values, met)."""
        lead = self.views[0]
        x = float(lead.sample(rng))
        atomic = lead.atom_mass_at(x) > 0
        w = self._weights(x, atomic)
        if w[0] > 0 and rng.random() * w[0] <= min(w):
            return np.full(len(self.views), x), True
        out = np.empty(len(self.views))
        out[0] = x
        for i, v in enumerate(self.views[1:], start=1):
            out[i] = self._residual_draw(v, rng)
        return out, False

    def _residual_draw(self, view: DistributionView, rng: np.random.Generator) -> float:
        for _ in range(self.rejection_cap):
            y = float(view.sample(rng))
            atomic = view.atom_mass_at(y) > 0
            w = self._weights(y, atomic)
            mine = float(view.atom_mass_at(y)) if atomic else float(view.density(y))
            if mine <= 0:
                continue
            if rng.random() * mine > min(w):
                return y
        raise SpecViolationError(
            "residual rejection failed: the marginals overlap completely "
            "(kappa = 1) or are numerically degenerate")


def maximal_couple(views: Sequence[Union[IntensitySpec, DistributionView]],
                   rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """One maximally coupled joint draw over the given laws."""
    return MaximalCouple(views).draw(rng)


# ---------------------------------------------------------------------------
# Configuration and analytic constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingConfig:
    """Knobs of the paired-renewal coupling and its moment bound.

    ``theta`` is the elapsed-time threshold gating coupling attempts (it
    must exceed the mean backward-time bound), ``ell`` the moment order of
    the coupling epoch, ``holder_exponent`` the conjugate-pair exponent in
    the moment-norm chain (smaller needs fewer finite period moments).
    """

    theta: float
    ell: int = 1
    holder_exponent: int = 2
    attempt_cap: int = 10_000
    replications: int = 10_000

    def __post_init__(self):
        if self.theta <= 0:
            raise ConfigError(f"theta must be positive, got {self.theta}")
        if self.ell < 1:
            raise ConfigError(f"ell must be >= 1, got {self.ell}")
        if self.holder_exponent < 2:
            raise ConfigError("holder_exponent must be an integer >= 2")
        if self.attempt_cap < 1:
            raise ConfigError("attempt_cap must be >= 1")


@dataclass(frozen=True)
class CouplingConstants:
    """Certified attempt constants: mean-backward bound, gate and meet
    probabilities, and the per-attempt failure bound ``pi``."""

    xi: float
    p_theta: float
    kappa_theta: float

    @property
    def pi(self) -> float:
        return 1.0 - self.p_theta * self.kappa_theta


def coupling_constants(spec: IntensitySpec, config: CouplingConfig) -> CouplingConstants:
    xi = lorden_bound(spec)
    if config.theta <= xi:
        raise ConfigError(
            f"theta={config.theta} must exceed the backward-time bound xi={xi:.6g}")
    p_theta = 1.0 - xi / config.theta
    kappa_theta = common_part_inf(spec, config.theta)
    return CouplingConstants(xi=xi, p_theta=p_theta, kappa_theta=kappa_theta)


# ---------------------------------------------------------------------------
# The paired-process construction
# ---------------------------------------------------------------------------


@dataclass
class CoupleRun:
    """Outcome of one paired replication."""

    tau: Optional[float]
    censored: bool
    attempts: int
    z1_at: np.ndarray            # backward times of stream 1 at the checkpoints
    z2_at: np.ndarray
    epochs1: Optional[np.ndarray] = None
    epochs2: Optional[np.ndarray] = None


def couple_once(spec: IntensitySpec, b1: float, b2: float, theta: float,
                attempt_cap: int, rng: np.random.Generator,
                checkpoints: Sequence[float] = (),
                keep_paths: bool = False) -> CoupleRun:
    """Run one paired replication of the two-stream coupling construction.

    Stream 1 commits each of its periods at its renewals.  Stream 2 is
    simulated lazily: at each of its renewals its next period is split
    against stream 1's upcoming renewal — either it ends before it
    (conditional draw) or its residual is deferred to that epoch, where,
    if the elapsed time is at most ``theta``, the residual is maximally
    coupled with stream 1's next full period.  A meet renews both streams
    simultaneously; they are merged from then on.
    """
    view = spec.view
    cps = np.asarray(sorted(checkpoints), dtype=float)
    z1 = np.empty(len(cps))
    z2 = np.empty(len(cps))
    cp_idx = 0

    s1_last = -float(b1)
    s2_last = -float(b2)
    s1_next = float(residual_distribution(view, b1).quantile(rng.random()))
    s2_next = float(residual_distribution(view, b2).quantile(rng.random()))
    s2_committed = True
    ep1: Optional[list] = [] if keep_paths else None
    ep2: Optional[list] = [] if keep_paths else None

    tau: Optional[float] = None
    censored = False
    attempts = 0

    def record_up_to(t_event: float):
        nonlocal cp_idx
        while cp_idx < len(cps) and cps[cp_idx] < t_event:
            z1[cp_idx] = cps[cp_idx] - s1_last
            z2[cp_idx] = cps[cp_idx] - s2_last
            cp_idx += 1

    def fresh_period() -> float:
        return float(view.quantile(rng.random()))

    max_events = 10_000_000
    for _ in range(max_events):
        merged_done = tau is not None and s1_last >= tau
        if (merged_done or censored) and cp_idx >= len(cps):
            break
        if tau is None and s2_committed and s2_next <= s1_next:
            # stream 2 renews first; split its next period against s1_next
            record_up_to(s2_next)
            s2_last = s2_next
            if keep_paths:
                ep2.append(s2_last)
            u = rng.random()
            gap = s1_next - s2_last
            if u < float(view.cdf(gap)):
                s2_next = s2_last + float(view.quantile(u))
                s2_committed = True
            else:
                s2_committed = False
            continue

        # stream 1 renews at t_hat
        t_hat = s1_next
        record_up_to(t_hat)
        s1_last = t_hat
        if keep_paths:
            ep1.append(t_hat)

        if tau is not None:
            # merged: both streams share renewals from tau on
            s2_last = t_hat
            if keep_paths:
                ep2.append(t_hat)
            s1_next = t_hat + fresh_period()
            continue

        if not s2_committed:
            a = t_hat - s2_last
            if a <= theta and not censored:
                if attempts >= attempt_cap:
                    censored = True
                else:
                    attempts += 1
                    residual = residual_distribution(view, a)
                    values, met = MaximalCouple([view, residual]).draw(rng)
                    if met:
                        tau = t_hat + float(values[0])
                        record_up_to(tau)
                        s1_next = tau
                        s2_next = tau
                        s2_committed = True
                        continue
                    s1_next = t_hat + float(values[0])
                    s2_next = t_hat + float(values[1])
                    s2_committed = True
                    continue
            # skipped attempt (elapsed beyond theta) or censored: resolve freely
            w = float(residual_distribution(view, a).quantile(rng.random()))
            s2_next = t_hat + w
            s2_committed = True
            s1_next = t_hat + fresh_period()
            continue

        # stream 2 has a committed pending renewal beyond t_hat: no attempt
        s1_next = t_hat + fresh_period()
    else:
        raise RuntimeError("coupling run exceeded the event budget")

    return CoupleRun(tau=tau, censored=censored, attempts=attempts, z1_at=z1, z2_at=z2,
                     epochs1=None if ep1 is None else np.asarray(ep1),
                     epochs2=None if ep2 is None else np.asarray(ep2))


def successful_coupling(spec: IntensitySpec, b1: float, b2: float,
                        config: CouplingConfig, rng: np.random.Generator,
                        checkpoints: Sequence[float] = (),
                        keep_paths: bool = False) -> list[CoupleRun]:
    """Replicate the paired construction; one child stream per replication."""
    xi = lorden_bound(spec)
    if config.theta <= xi:
        raise ConfigError(
            f"theta={config.theta} must exceed the backward-time bound xi={xi:.6g}")
    streams = rng.spawn(config.replications)
    return [couple_once(spec, b1, b2, config.theta, config.attempt_cap, child,
                        checkpoints=checkpoints, keep_paths=keep_paths)
            for child in streams]


# ---------------------------------------------------------------------------
# Moment bound on the coupling epoch and TV-bound curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingBound:
    """Computable bound C on E tau^ell, with the pieces echoed."""

    c_value: float
    tau_norm: float          # bound on ||tau||_ell
    start_norm: float        # ||W0^(1)||_ell + ||W0^(2)||_ell
    period_norm: float       # (E xi^(ell r))^(1/(ell r))
    geometric_sum: float     # sum over attempts of pi^((i-1)/(ell r'))
    constants: CouplingConstants
    ell: int
    holder_exponent: int


def _bound_pieces(spec: IntensitySpec, config: CouplingConfig,
                  constants: CouplingConstants) -> tuple[float, float]:
    if constants.kappa_theta <= 0 or constants.pi >= 1:
        raise CouplingUnboundedError(
            f"per-attempt failure probability pi={constants.pi:.6g} reaches 1 "
            "(degenerate overlap), no finite bound exists")
    ell, r = config.ell, config.holder_exponent
    r_conj = r / (r - 1.0)
    period_norm = moment(spec, ell * r) ** (1.0 / (ell * r))
    geom = 1.0 / (1.0 - constants.pi ** (1.0 / (ell * r_conj)))
    return period_norm, geom


def _residual_norm(spec: IntensitySpec, b: float, ell: int) -> float:
    return moment(residual_distribution(spec, b), ell) ** (1.0 / ell)


def coupling_epoch_moment_bound(spec: IntensitySpec, b1: float, b2: float,
                                config: CouplingConfig,
                                constants: Optional[CouplingConstants] = None) -> CouplingBound:
    """Closed-form bound on E tau^ell for the paired construction.

    The coupling epoch is dominated by the initial forward times plus a
    geometric number of period draws; the norm chain uses a conjugate
    exponent pair (r, r') so only E xi^(ell r) needs to be finite.
    """
    if constants is None:
        constants = coupling_constants(spec, config)
    period_norm, geom = _bound_pieces(spec, config, constants)
    ell = config.ell
    start_norm = _residual_norm(spec, b1, ell) + _residual_norm(spec, b2, ell)
    tau_norm = start_norm + period_norm * geom
    return CouplingBound(c_value=tau_norm ** ell, tau_norm=tau_norm, start_norm=start_norm,
                         period_norm=period_norm, geometric_sum=geom, constants=constants,
                         ell=ell, holder_exponent=config.holder_exponent)


def tv_bound_curve(c_value: float, ell: int, t_grid) -> np.ndarray:
    """Pointwise bound min(1, C / t^ell) on the total-variation distance."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("bound grid times must be positive")
    return np.minimum(1.0, c_value / t ** ell)


def stationary_integrated_bound(spec: IntensitySpec, b1: float, config: CouplingConfig,
                                constants: Optional[CouplingConstants] = None,
                                nodes_per_panel: int = 16) -> float:
    """Coefficient of the bound to the stationary law: the two-start constant
    integrated over the second start drawn from the stationary backward law."""
    if constants is None:
        constants = coupling_constants(spec, config)
    period_norm, geom = _bound_pieces(spec, config, constants)
    ell = config.ell
    base = _residual_norm(spec, b1, ell) + period_norm * geom
    view = spec.view
    mean = view.moment(1)

    glx, glw = np.polynomial.legendre.leggauss(nodes_per_panel)

    def panel(lo: float, hi: float) -> float:
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        total = 0.0
        for xi_, wi in zip(glx, glw):
            x = mid + half * xi_
            sx = float(view.survival(x))
            if sx <= 1e-14:
                continue
            total += wi * (base + _residual_norm(spec, x, ell)) ** ell * sx / mean
        return half * total

    total = panel(0.0, 1.0)
    lo, hi = 1.0, 2.0
    for _ in range(60):
        if float(view.survival(lo)) < 1e-13:
            return total
        part = panel(lo, hi)
        total += part
        if part < 1e-9 * max(total, 1.0) and float(view.survival(hi)) < 1e-12:
            return total
        lo, hi = hi, 2.0 * hi
    raise CouplingUnboundedError("stationary integration tail did not converge")


# ---------------------------------------------------------------------------
# Binned total-variation estimates
# ---------------------------------------------------------------------------


def empirical_tv(samples_p: np.ndarray, samples_q: np.ndarray, bins: int = 128) -> float:
    """Binned TV estimate over equal-probability bins of the pooled sample.

    Binning only merges mass, so the estimate lower-bounds the true total
    variation; dominance checks against analytic upper bounds stay sound.
    """
    x = np.asarray(samples_p, dtype=float)
    y = np.asarray(samples_q, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both sample sets must be nonempty")
    pooled = np.concatenate([x, y])
    interior = np.unique(np.quantile(pooled, np.arange(1, bins) / bins))
    nb = len(interior) + 1
    px = np.bincount(np.searchsorted(interior, x, side="left"), minlength=nb) / len(x)
    py = np.bincount(np.searchsorted(interior, y, side="left"), minlength=nb) / len(y)
    return 0.5 * float(np.abs(px - py).sum())


def empirical_tv_vs_law(samples: np.ndarray, law: Union[IntensitySpec, DistributionView],
                        bins: int = 128) -> float:
    """Binned TV between an empirical sample and an analytic law."""
    view = _as_view(law)
    x = np.asarray(samples, dtype=float)
    if len(x) == 0:
        raise ValueError("sample set must be nonempty")
    interior = np.unique(view.quantile(np.arange(1, bins) / bins))
    edges = np.concatenate([[-np.inf], interior, [np.inf]])
    cdf_at = np.concatenate([[0.0], np.asarray(view.cdf(interior), dtype=float), [1.0]])
    probs = np.diff(cdf_at)
    idx = np.searchsorted(interior, x, side="left")
    counts = np.bincount(idx, minlength=len(probs))
    freq = counts / len(x)
    return 0.5 * float(np.abs(freq - probs).sum())


# ---------------------------------------------------------------------------
# Aggregated report
# ---------------------------------------------------------------------------


@dataclass
class CouplingReport:
    """Coupling-epoch statistics, certified constants and TV-bound curves."""

    config: CouplingConfig
    constants: CouplingConstants
    bound: CouplingBound
    tau_samples: np.ndarray
    censored: int
    replications: int
    t_grid: np.ndarray
    tv_bound: np.ndarray
    tv_empirical: np.ndarray
    stationary_coefficient: Optional[float] = None
    tv_empirical_stationary: Optional[np.ndarray] = None

    @property
    def censor_rate(self) -> float:
        return self.censored / self.replications

    def tau_moment(self, ell: Optional[int] = None) -> float:
        ell = self.config.ell if ell is None else ell
        return float((self.tau_samples ** ell).mean())

    def tau_moment_se(self, ell: Optional[int] = None) -> float:
        ell = self.config.ell if ell is None else ell
        x = self.tau_samples ** ell
        return float(x.std(ddof=1) / math.sqrt(len(x)))


def coupling_report(spec: IntensitySpec, b1: float, b2: float, config: CouplingConfig,
                    rng: np.random.Generator, t_grid: Sequence[float] = (5, 10, 20, 40),
                    tv_replications: Optional[int] = None,
                    with_stationary: bool = True) -> CouplingReport:
    """Full cross-validated report: run the coupling, compute the analytic
    bound, and measure binned TV between two-start backward-time laws."""
    constants = coupling_constants(spec, config)
    bound = coupling_epoch_moment_bound(spec, b1, b2, config, constants=constants)
    runs = successful_coupling(spec, b1, b2, config, rng)
    tau = np.array([r.tau for r in runs if r.tau is not None])
    censored = sum(1 for r in runs if r.censored)

    grid = np.asarray(t_grid, dtype=float)
    m = tv_replications or config.replications
    sv1 = sample_backward_times(spec, b1, grid, m, rng)
    sv2 = sample_backward_times(spec, b2, grid, m, rng)
    tv_emp = np.array([empirical_tv(sv1.backward[:, k], sv2.backward[:, k])
                       for k in range(len(grid))])
    report = CouplingReport(
        config=config, constants=constants, bound=bound, tau_samples=tau,
        censored=censored, replications=config.replications, t_grid=grid,
        tv_bound=tv_bound_curve(bound.c_value, config.ell, grid), tv_empirical=tv_emp)
    if with_stationary:
        report.stationary_coefficient = stationary_integrated_bound(
            spec, b1, config, constants=constants)
        st_view = stationary_law(spec)
        report.tv_empirical_stationary = np.array(
            [empirical_tv_vs_law(sv1.backward[:, k], st_view) for k in range(len(grid))])
    return report
