"""
Status-line output for long sweeps.

Progress goes to stderr only, and only when stderr is an ANSI-capable TTY;
CSV and JSON results never pass through here.
"""

from __future__ import annotations

import os
import sys
from typing import TextIO

__all__ = [
    "NO_STATUS_ENV",
    "ProgressBar",
    "StatusLine",
    "get_terminal_width",
    "supports_status_line",
]

NO_STATUS_ENV = "KRYLOV_AGP_NO_STATUS"

ANSI_CLEAR_LINE = "\033[2K"
ANSI_MOVE_TO_COL_1 = "\033[1G"
ANSI_DIM = "\033[2m"
ANSI_RESET = "\033[0m"


def supports_status_line(stream: TextIO | None = None) -> bool:
    """
    True when ``stream`` (default stderr) can carry a redrawn status line.

    Disabled for non-TTYs, ``TERM=dumb``, ``NO_COLOR`` and ``KRYLOV_AGP_NO_STATUS``.
    """
    stream = stream or sys.stderr
    if not hasattr(stream, "isatty") or not stream.isatty():
        return False
    if os.environ.get("TERM", "") == "dumb":
        return False
    return not (os.environ.get("NO_COLOR") or os.environ.get(NO_STATUS_ENV))


def get_terminal_width(default: int = 80) -> int:
    try:
        return os.get_terminal_size().columns
    except OSError:
        return default


class StatusLine:
    """
    One redrawn line on the current row.

    ``show`` claims the row, ``update`` rewrites it in place and ``hide``
    clears it so the next log record starts on a clean line.
    """

    def __init__(self, stream: TextIO | None = None, width: int | None = None):
        self._stream = stream or sys.stderr
        self._width = width or get_terminal_width()
        self._visible = False
        self._last_content = ""

    @property
    def visible(self) -> bool:
        return self._visible

    def show(self) -> None:
        self._visible = True

    def hide(self) -> None:
        if not self._visible:
            return
        self._visible = False
        self._last_content = ""
        self._write(f"{ANSI_MOVE_TO_COL_1}{ANSI_CLEAR_LINE}")

    def update(self, content: str) -> None:
        if not self._visible:
            return
        limit = self._width - 2
        if len(content) > limit:
            content = content[: limit - 3] + "..."
        if content == self._last_content:
            return
        self._last_content = content
        self._write(f"{ANSI_MOVE_TO_COL_1}{ANSI_CLEAR_LINE}{ANSI_DIM}{content}{ANSI_RESET}")

    def _write(self, text: str) -> None:
        try:
            self._stream.write(text)
            self._stream.flush()
        except OSError:
            # stderr closed under us (broken pipe); stop drawing.
            self._visible = False


class ProgressBar:
    """Completed-of-total bar rendered as ``███░░ 60%``."""

    def __init__(self, total: int, width: int = 20):
        self.total = total
        self.current = 0
        self.width = width

    def update(self, current: int) -> None:
        self.current = max(0, min(current, self.total))

    def increment(self, amount: int = 1) -> None:
        self.update(self.current + amount)

    @property
    def fraction(self) -> float:
        return 1.0 if self.total == 0 else self.current / self.total

    def render(self) -> str:
        filled = int(self.width * self.fraction)
        return f"{'█' * filled}{'░' * (self.width - filled)} {int(100 * self.fraction)}%"
