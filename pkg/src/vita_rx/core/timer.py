"""
Run Timer — wall-clock seconds per named step, grouped for reporting.

Training times each epoch; the orchestrator times each (label, seed) run
under its variant group. Timings go to the log and the console, never to
result files, so reports stay byte-identical between runs.

Usage:
    timer = RunTimer()
    with timer.step("full seed=0", group="full") as timing:
        train(...)
    log.info("took %.1fs", timing.seconds)
    timer.by_group()  # {"full": GroupTiming(steps=1, seconds=...)}
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


@dataclass
class StepTiming:
    """One timed step; ``seconds`` is filled in when the step exits."""

    name: str
    group: str
    seconds: float = 0.0


@dataclass(frozen=True)
class GroupTiming:
    steps: int
    seconds: float

    @property
    def mean_seconds(self) -> float:
        return self.seconds / self.steps if self.steps else 0.0


@dataclass
class RunTimer:
    """Collects step timings in the order the steps finish."""

    steps: list[StepTiming] = field(default_factory=list, init=False)
    _origin: float = field(default_factory=time.perf_counter, init=False, repr=False)

    @contextmanager
    def step(self, name: str, group: str | None = None) -> Iterator[StepTiming]:
        """Time the body; the step is recorded even if the body raises."""
        timing = StepTiming(name=name, group=group or name)
        start = time.perf_counter()
        try:
            yield timing
        finally:
            timing.seconds = time.perf_counter() - start
            self.steps.append(timing)
            log.debug("⏱️  %s: %.2fs", name, timing.seconds)

    def by_group(self) -> dict[str, GroupTiming]:
        """Step count and total seconds per group, in first-seen order."""
        totals: dict[str, tuple[int, float]] = {}
        for s in self.steps:
            count, seconds = totals.get(s.group, (0, 0.0))
            totals[s.group] = (count + 1, seconds + s.seconds)
        return {g: GroupTiming(steps=c, seconds=t) for g, (c, t) in totals.items()}

    @property
    def wall_seconds(self) -> float:
        return time.perf_counter() - self._origin
