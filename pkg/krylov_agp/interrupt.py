"""
Ctrl+C handling for sweeps.

Escalation:
- 1st Ctrl+C: stop dispatching new points; points already running finish
  and the completed prefix of the table is written.
- 2nd Ctrl+C within the escalation window: raise KeyboardInterrupt at once.
"""

from __future__ import annotations

import logging
import signal
import sys
import time
from collections.abc import Callable
from enum import Enum
from types import FrameType
from typing import Any

logger = logging.getLogger(__name__)

__all__ = ["InterruptAction", "SweepInterruptHandler"]


class InterruptAction(Enum):
    STOP_DISPATCH = "stop_dispatch"
    ABORT = "abort"


class SweepInterruptHandler:
    """
    SIGINT handler with two-step escalation.

    Use as a context manager around a sweep; the previous handler is
    restored on exit.
    """

    def __init__(
        self,
        on_stop: Callable[[], None] | None = None,
        escalation_window: float = 2.0,
        clock: Callable[[], float] = time.monotonic,
    ):
        self._on_stop = on_stop
        self._escalation_window = escalation_window
        self._clock = clock
        self._interrupt_count = 0
        self._last_interrupt: float | None = None
        self._original_handler: Any = None
        self._installed = False

    @property
    def stopped(self) -> bool:
        return self._interrupt_count > 0

    def install(self) -> None:
        if self._installed:
            return
        self._original_handler = signal.getsignal(signal.SIGINT)
        signal.signal(signal.SIGINT, self._handle_sigint)
        self._installed = True

    def uninstall(self) -> None:
        if not self._installed:
            return
        if self._original_handler is not None:
            signal.signal(signal.SIGINT, self._original_handler)
        self._installed = False

    def __enter__(self) -> SweepInterruptHandler:
        self.install()
        return self

    def __exit__(self, *exc: object) -> None:
        self.uninstall()

    def next_action(self) -> InterruptAction:
        """Register one interrupt and return the action it escalates to."""
        now = self._clock()
        within = (
            self._last_interrupt is not None
            and now - self._last_interrupt < self._escalation_window
        )
        self._interrupt_count = self._interrupt_count + 1 if within else 1
        self._last_interrupt = now
        if self._interrupt_count == 1:
            return InterruptAction.STOP_DISPATCH
        return InterruptAction.ABORT

    def _handle_sigint(self, signum: int, frame: FrameType | None) -> None:
        action = self.next_action()
        if action is InterruptAction.STOP_DISPATCH:
            self._show_hint("Stopping after running points... (press again to abort)")
            logger.info("Interrupt received; no new sweep points will start")
            if self._on_stop:
                self._on_stop()
            return
        self._show_hint("Aborting sweep")
        raise KeyboardInterrupt("sweep aborted")

    def _show_hint(self, message: str) -> None:
        sys.stderr.write(f"\n⚠ {message}\n")
        sys.stderr.flush()
