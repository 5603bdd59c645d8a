"""Tests for the step timer."""

from __future__ import annotations

import pytest

from vita_rx.core.timer import RunTimer


class TestRunTimer:
    """Tests for step recording and grouping."""

    def test_groups_in_first_seen_order(self) -> None:
        timer = RunTimer()
        for name, group in [("full seed=0", "full"), ("rs seed=0", "rs"), ("full seed=1", "full")]:
            with timer.step(name, group=group):
                pass
        groups = timer.by_group()
        assert list(groups) == ["full", "rs"]
        assert groups["full"].steps == 2
        assert groups["full"].seconds == pytest.approx(
            sum(s.seconds for s in timer.steps if s.group == "full")
        )

    def test_group_defaults_to_name(self) -> None:
        timer = RunTimer()
        with timer.step("epoch 1") as timing:
            pass
        assert timing.group == "epoch 1"
        assert timing.seconds >= 0.0
        assert timer.wall_seconds >= timing.seconds

    def test_failed_step_is_recorded(self) -> None:
        timer = RunTimer()
        with pytest.raises(RuntimeError), timer.step("boom"):
            raise RuntimeError("boom")
        assert [s.name for s in timer.steps] == ["boom"]

    def test_no_steps_no_groups(self) -> None:
        assert RunTimer().by_group() == {}
