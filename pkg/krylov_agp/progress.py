"""
Live progress indicator for sweeps.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Any, TextIO

from krylov_agp.terminal import ProgressBar, StatusLine, supports_status_line

logger = logging.getLogger(__name__)

__all__ = ["SweepIndicator", "SweepState"]

SPINNER_FRAMES = ("⠋", "⠙", "⠹", "⠸", "⠼", "⠴", "⠦", "⠧", "⠇", "⠏")


@dataclass
class SweepState:
    """Counters shown on the status line."""

    label: str = "sweep"
    total: int = 0
    completed: int = 0
    running: int = 0
    started_at: datetime | None = None
    stopping: bool = False

    def elapsed_seconds(self) -> float:
        if not self.started_at:
            return 0.0
        return (datetime.now() - self.started_at).total_seconds()

    def format_elapsed(self) -> str:
        """MM:SS, or H:MM:SS past an hour."""
        secs = int(self.elapsed_seconds())
        if secs >= 3600:
            return f"{secs // 3600}:{(secs % 3600) // 60:02d}:{secs % 60:02d}"
        return f"{secs // 60:02d}:{secs % 60:02d}"


class SweepIndicator:
    """
    Redraws ``⠋ label │ ███░ 40% │ 4/10 │ 00:12`` while a sweep runs.

    Config options:
        update_interval: seconds between redraws (default: 0.1)
        show_elapsed: bool (default: True)
        bar_width: int (default: 20)
    """

    def __init__(self, config: dict[str, Any] | None = None, stream: TextIO | None = None):
        config = config or {}
        self._update_interval = config.get("update_interval", 0.1)
        self._show_elapsed = config.get("show_elapsed", True)
        self._bar_width = config.get("bar_width", 20)
        self._stream = stream
        self._state = SweepState()
        self._lock = threading.Lock()
        self._frame = 0
        self._status_line: StatusLine | None = None
        self._update_task: asyncio.Task[None] | None = None
        self._enabled = supports_status_line(stream)
        if not self._enabled:
            logger.debug("stderr is not a capable terminal; progress display disabled")

    @property
    def state(self) -> SweepState:
        return self._state

    def start(self, label: str, total: int) -> None:
        with self._lock:
            self._state = SweepState(label=label, total=total, started_at=datetime.now())
        if not self._enabled:
            return
        self._status_line = StatusLine(stream=self._stream)
        self._status_line.show()
        self._update_task = asyncio.get_running_loop().create_task(self._update_loop())

    def point_started(self) -> None:
        with self._lock:
            self._state.running += 1

    def point_finished(self) -> None:
        with self._lock:
            self._state.running -= 1
            self._state.completed += 1

    def mark_stopping(self) -> None:
        with self._lock:
            self._state.stopping = True

    async def stop(self) -> None:
        if self._update_task:
            self._update_task.cancel()
            try:
                await self._update_task
            except asyncio.CancelledError:
                pass
            self._update_task = None
        if self._status_line:
            self._status_line.hide()
            self._status_line = None

    async def _update_loop(self) -> None:
        while True:
            try:
                with self._lock:
                    line = self.format_status_line()
                if self._status_line:
                    self._status_line.update(line)
            except Exception as e:
                logger.debug(f"Status line update error: {e}")
            await asyncio.sleep(self._update_interval)

    def format_status_line(self) -> str:
        state = self._state
        frame = SPINNER_FRAMES[self._frame % len(SPINNER_FRAMES)]
        self._frame += 1
        bar = ProgressBar(total=state.total, width=self._bar_width)
        bar.update(state.completed)
        parts = [f"{frame} {state.label}", bar.render(), f"{state.completed}/{state.total}"]
        if state.stopping:
            parts.append("stopping")
        if self._show_elapsed:
            parts.append(state.format_elapsed())
        return " │ ".join(parts)

    def format_final_summary(self) -> str:
        state = self._state
        mark = "⚠" if state.stopping else "✓"
        counts = f"{state.completed}/{state.total}"
        return f"{mark} {state.label} │ {counts} │ {state.format_elapsed()}"
