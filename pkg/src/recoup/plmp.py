"""Variable-dimension Markov processes with unit-slope clocks.

A state is an ascending vector of integer labels plus one nonnegative
clock per label; between events every clock grows at unit slope.  Three
event kinds are driven by state-dependent intensities: zeroing a subset
of clocks, adding labelled clocks, and deleting labelled clocks.
Dynamics declare their supported subsets explicitly through callables
returning ``{labels: rate}`` maps evaluated on the current state.

Two simulation modes are provided.  Event-driven mode thins proposals
from a user-supplied intensity majorant and is exact; the majorant must
dominate the total intensity along the deterministic clock flow from the
queried state.  Stepped mode discretizes time with step ``h`` and applies
the one-step transition probabilities directly (O(h) bias; fresh clocks
start uniformly inside the step).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, MajorantViolationError, SpecViolationError

__all__ = [
    "PlmpState",
    "PlmpDynamics",
    "PlmpEvent",
    "PlmpTrace",
    "simulate_plmp",
    "detect_regenerations",
    "cycle_statistics",
    "CycleStats",
]

Labels = tuple[int, ...]
RateMap = Mapping[Labels, float]


@dataclass(frozen=True)
class PlmpState:
    """Ascending label vector with one clock per label."""

    labels: Labels
    clocks: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.clocks):
            raise SpecViolationError("labels and clocks must have equal length")
        if len(self.labels) < 1:
            raise SpecViolationError("rank must be at least 1")
        if any(b <= a for a, b in zip(self.labels, self.labels[1:])):
            raise SpecViolationError("labels must be strictly ascending")
        if any(c < 0 for c in self.clocks):
            raise SpecViolationError("clocks must be nonnegative")

    @property
    def rank(self) -> int:
        return len(self.labels)

    def clock_of(self, label: int) -> float:
        return self.clocks[self.labels.index(label)]


@dataclass(frozen=True)
class PlmpDynamics:
    """Sparse transition registry: each callable maps a state to {labels: rate}.

    ``zero_rates`` zeroes the clocks of an existing label subset,
    ``add_rates`` appends new (disjoint) labels with fresh clocks,
    ``delete_rates`` removes an existing label subset.  ``majorant`` must
    bound the total intensity along the unit-slope flow from the state;
    it is required by the event-driven mode.
    """

    zero_rates: Optional[Callable[[PlmpState], RateMap]] = None
    add_rates: Optional[Callable[[PlmpState], RateMap]] = None
    delete_rates: Optional[Callable[[PlmpState], RateMap]] = None
    majorant: Optional[Callable[[PlmpState], float]] = None


@dataclass(frozen=True)
class PlmpEvent:
    time: float
    kind: str            # "zero" | "add" | "delete"
    labels: Labels       # the affected subset M
    before: PlmpState
    after: PlmpState


@dataclass
class PlmpTrace:
    initial: PlmpState
    events: list[PlmpEvent]
    final: PlmpState
    horizon: float
    mode: str
    step: Optional[float] = None

    def event_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events])


def _collect(dynamics: PlmpDynamics, state: PlmpState) -> list[tuple[str, Labels, float]]:
    out: list[tuple[str, Labels, float]] = []
    current = set(state.labels)
    for kind, getter in (("zero", dynamics.zero_rates),
                         ("add", dynamics.add_rates),
                         ("delete", dynamics.delete_rates)):
        if getter is None:
            continue
        for labels, rate in getter(state).items():
            m = tuple(sorted(labels))
            if not m:
                raise SpecViolationError(f"{kind} event with empty label set")
            if not (np.isfinite(rate) and rate >= 0):
                raise SpecViolationError(f"{kind} rate for {m} is {rate!r}")
            if kind in ("zero", "delete") and not set(m) <= current:
                raise SpecViolationError(f"{kind} event names absent labels {m}")
            if kind == "add" and set(m) & current:
                raise SpecViolationError(f"add event names present labels {m}")
            if rate > 0:
                out.append((kind, m, float(rate)))
    return out


def _apply(state: PlmpState, kind: str, m: Labels, fresh: Callable[[], float]) -> PlmpState:
    labels = list(state.labels)
    clocks = list(state.clocks)
    if kind == "zero":
        for lab in m:
            clocks[labels.index(lab)] = fresh()
    elif kind == "add":
        for lab in m:
            labels.append(lab)
            clocks.append(fresh())
        order = np.argsort(labels, kind="stable")
        labels = [labels[i] for i in order]
        clocks = [clocks[i] for i in order]
    elif kind == "delete":
        keep = [i for i, lab in enumerate(labels) if lab not in set(m)]
        labels = [labels[i] for i in keep]
        clocks = [clocks[i] for i in keep]
    return PlmpState(tuple(labels), tuple(clocks))


def _grown(state: PlmpState, dt: float) -> PlmpState:
    return PlmpState(state.labels, tuple(c + dt for c in state.clocks))


def _pick(events: list[tuple[str, Labels, float]], total: float,
          rng: np.random.Generator) -> tuple[str, Labels, float]:
    u = rng.random() * total
    acc = 0.0
    for ev in events:
        acc += ev[2]
        if u <= acc:
            return ev
    return events[-1]


def simulate_plmp(initial: PlmpState, dynamics: PlmpDynamics, horizon: float,
                  rng: np.random.Generator, mode: str = "event",
                  step: float = 1e-3) -> PlmpTrace:
    """Simulate the clock process up to ``horizon``.

    mode="event" thins against ``dynamics.majorant`` (exact); mode="stepped"
    uses fixed steps of length ``step`` with per-step transition
    probabilities ``rate * step``.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if mode == "event":
        if dynamics.majorant is None:
            raise SpecViolationError("event-driven mode needs an intensity majorant")
        return _simulate_event(initial, dynamics, horizon, rng)
    if mode == "stepped":
        return _simulate_stepped(initial, dynamics, horizon, rng, step)
    raise ValueError(f"unknown mode {mode!r} (want 'event' or 'stepped')")


def _simulate_event(initial: PlmpState, dynamics: PlmpDynamics, horizon: float,
                    rng: np.random.Generator) -> PlmpTrace:
    t = 0.0
    state = initial
    events: list[PlmpEvent] = []
    while True:
        lam_bar = float(dynamics.majorant(state))
        if not (np.isfinite(lam_bar) and lam_bar >= 0):
            raise SpecViolationError(f"majorant returned {lam_bar!r} at {state}")
        if lam_bar == 0.0:
            if _collect(dynamics, state):
                raise MajorantViolationError(
                    f"majorant is zero but events have positive rate at {state}")
            state = _grown(state, horizon - t)
            t = horizon
            break
        dt = rng.exponential(1.0 / lam_bar)
        if t + dt > horizon:
            state = _grown(state, horizon - t)
            t = horizon
            break
        t += dt
        state = _grown(state, dt)
        candidates = _collect(dynamics, state)
        total = sum(r for _, _, r in candidates)
        if total > lam_bar * (1 + 1e-9):
            raise MajorantViolationError(
                f"total intensity {total:.6g} exceeds majorant {lam_bar:.6g} at {state}")
        if total > 0 and rng.random() * lam_bar <= total:
            kind, m, _ = _pick(candidates, total, rng)
            after = _apply(state, kind, m, fresh=lambda: 0.0)
            events.append(PlmpEvent(t, kind, m, state, after))
            state = after
    return PlmpTrace(initial=initial, events=events, final=state, horizon=horizon,
                     mode="event")


def _simulate_stepped(initial: PlmpState, dynamics: PlmpDynamics, horizon: float,
                      rng: np.random.Generator, step: float) -> PlmpTrace:
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    t = 0.0
    state = initial
    events: list[PlmpEvent] = []
    while t < horizon - 1e-15:
        h = min(step, horizon - t)
        candidates = _collect(dynamics, state)
        total = sum(r for _, _, r in candidates)
        p = total * h
        if p > 1.0:
            raise SpecViolationError(
                f"step {h} too large: one-step event probability {p:.3g} exceeds 1")
        t += h
        if total > 0 and rng.random() < p:
            kind, m, _ = _pick(candidates, total, rng)
            before = _grown(state, h)
            after = _apply(before, kind, m, fresh=lambda: rng.random() * h)
            events.append(PlmpEvent(t, kind, m, before, after))
            state = after
        else:
            state = _grown(state, h)
    return PlmpTrace(initial=initial, events=events, final=state, horizon=horizon,
                     mode="stepped", step=step)


def detect_regenerations(trace: PlmpTrace,
                         anchor: Callable[[PlmpState], bool]) -> np.ndarray:
    """Times of events whose post-state satisfies the anchor predicate."""
    return np.array([e.time for e in trace.events if anchor(e.after)])


@dataclass(frozen=True)
class CycleStats:
    """Empirical summary of cycle lengths between consecutive anchor hits."""

    count: int
    mean: float
    se_mean: float
    second_moment: float
    se_second_moment: float
    lorden_ratio: float       # second_moment / mean
    se_lorden_ratio: float


def cycle_statistics(regeneration_times) -> CycleStats:
    times = np.asarray(regeneration_times, dtype=float)
    if len(times) < 2:
        raise InsufficientDataError(
            f"need at least 2 regenerations to form a cycle, got {len(times)}")
    cycles = np.diff(times)
    n = len(cycles)
    m1 = float(cycles.mean())
    sq = cycles ** 2
    m2 = float(sq.mean())
    se1 = float(cycles.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    se2 = float(sq.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    ratio = m2 / m1
    # delta method for the ratio of correlated sample means
    if n > 1:
        cov = float(np.cov(cycles, sq, ddof=1)[0, 1]) / n
        var = (se2 ** 2) / m1 ** 2 - 2 * m2 * cov / m1 ** 3 + (m2 ** 2) * (se1 ** 2) / m1 ** 4
        se_ratio = float(np.sqrt(max(var, 0.0)))
    else:
        se_ratio = float("inf")
    return CycleStats(count=n, mean=m1, se_mean=se1, second_moment=m2,
                      se_second_moment=se2, lorden_ratio=ratio, se_lorden_ratio=se_ratio)
