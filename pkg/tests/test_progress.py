"""Tests for progress module."""

import asyncio
from datetime import datetime, timedelta

import pytest

from krylov_agp.progress import SweepIndicator, SweepState


class TestSweepState:
    """Tests for SweepState."""

    def test_not_started(self):
        """Elapsed time is zero before start."""
        assert SweepState().elapsed_seconds() == 0.0
        assert SweepState().format_elapsed() == "00:00"

    def test_minutes(self):
        """Elapsed time under an hour renders MM:SS."""
        state = SweepState(started_at=datetime.now() - timedelta(seconds=125))
        assert state.format_elapsed() == "02:05"

    def test_hours(self):
        """Elapsed time past an hour renders H:MM:SS."""
        state = SweepState(started_at=datetime.now() - timedelta(seconds=3725))
        assert state.format_elapsed() == "1:02:05"


class TestSweepIndicator:
    """Tests for SweepIndicator."""

    def test_disabled_off_tty(self, no_status):
        """Without a capable terminal start() draws nothing."""

        async def scenario():
            indicator = SweepIndicator()
            indicator.start("xxz", 3)
            indicator.point_started()
            indicator.point_finished()
            await indicator.stop()
            return indicator.state

        state = asyncio.run(scenario())
        assert state.completed == 1
        assert state.running == 0
        assert state.total == 3

    def test_status_line_format(self):
        """The status line shows label, bar, counts and elapsed time."""
        indicator = SweepIndicator({"bar_width": 4})
        indicator._state = SweepState(label="ising", total=4, completed=2)
        line = indicator.format_status_line()
        assert line.startswith("⠋ ising")
        assert "██░░ 50%" in line
        assert "2/4" in line
        assert line.endswith("00:00")

    def test_stopping_marker(self):
        """mark_stopping() shows up in the line and the final summary."""
        indicator = SweepIndicator({"show_elapsed": False})
        indicator._state = SweepState(label="sweep", total=5, completed=3)
        indicator.mark_stopping()
        assert indicator.format_status_line().endswith("stopping")
        assert indicator.format_final_summary().startswith("⚠ sweep │ 3/5")

    def test_final_summary(self):
        """A finished sweep gets a check mark."""
        indicator = SweepIndicator()
        indicator._state = SweepState(label="sweep", total=2, completed=2)
        assert indicator.format_final_summary() == "✓ sweep │ 2/2 │ 00:00"

    @pytest.mark.asyncio
    async def test_draws_on_tty(self, mock_tty):
        """On a TTY the update loop writes the status line."""
        indicator = SweepIndicator({"update_interval": 0.01}, stream=mock_tty)
        indicator.start("lmg", 2)
        await asyncio.sleep(0.05)
        await indicator.stop()
        assert "lmg" in mock_tty.getvalue()
