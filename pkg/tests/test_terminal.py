"""Tests for terminal module."""

import io

from krylov_agp.terminal import (
    ANSI_CLEAR_LINE,
    NO_STATUS_ENV,
    ProgressBar,
    StatusLine,
    supports_status_line,
)


class TestSupportsStatusLine:
    """Tests for terminal capability detection."""

    def test_non_tty_returns_false(self):
        """Non-TTY streams don't support status line."""
        assert supports_status_line(io.StringIO()) is False

    def test_tty_returns_true(self, mock_tty):
        """A capable TTY supports the status line."""
        assert supports_status_line(mock_tty) is True

    def test_no_color_disables(self, mock_tty, monkeypatch):
        """NO_COLOR disables the status line even on a TTY."""
        monkeypatch.setenv("NO_COLOR", "1")
        assert supports_status_line(mock_tty) is False

    def test_no_status_env_disables(self, mock_tty, monkeypatch):
        """KRYLOV_AGP_NO_STATUS disables the status line."""
        monkeypatch.setenv(NO_STATUS_ENV, "1")
        assert supports_status_line(mock_tty) is False

    def test_dumb_terminal(self, mock_tty, monkeypatch):
        """TERM=dumb disables the status line."""
        monkeypatch.setenv("TERM", "dumb")
        assert supports_status_line(mock_tty) is False


class TestProgressBar:
    """Tests for ProgressBar class."""

    def test_empty_progress(self):
        """Empty progress bar shows 0%."""
        bar = ProgressBar(total=100, width=10)
        assert bar.render() == "░░░░░░░░░░ 0%"

    def test_half_progress(self):
        """Half progress shows 50%."""
        bar = ProgressBar(total=10, width=10)
        bar.update(5)
        assert bar.render() == "█████░░░░░ 50%"

    def test_clamped(self):
        """Updates are clamped to [0, total]."""
        bar = ProgressBar(total=4, width=4)
        bar.update(9)
        assert bar.current == 4
        bar.update(-3)
        assert bar.current == 0

    def test_increment(self):
        """increment() adds to current progress."""
        bar = ProgressBar(total=10, width=10)
        bar.increment(3)
        bar.increment(2)
        assert bar.current == 5

    def test_zero_total_is_100_percent(self):
        """An empty sweep renders as complete."""
        assert "100%" in ProgressBar(total=0, width=10).render()


class TestStatusLine:
    """Tests for StatusLine class."""

    def test_hidden_line_writes_nothing(self):
        """update() before show() is a no-op."""
        stream = io.StringIO()
        StatusLine(stream=stream, width=40).update("hello")
        assert stream.getvalue() == ""

    def test_update_writes_in_place(self):
        """Updates clear the row and rewrite it."""
        stream = io.StringIO()
        status = StatusLine(stream=stream, width=40)
        status.show()
        status.update("hello")
        assert ANSI_CLEAR_LINE in stream.getvalue()
        assert "hello" in stream.getvalue()

    def test_repeated_content_skipped(self):
        """Identical content is not redrawn."""
        stream = io.StringIO()
        status = StatusLine(stream=stream, width=40)
        status.show()
        status.update("same")
        written = len(stream.getvalue())
        status.update("same")
        assert len(stream.getvalue()) == written

    def test_update_truncates_long_content(self):
        """Long content is truncated to terminal width."""
        stream = io.StringIO()
        status = StatusLine(stream=stream, width=20)
        status.show()
        status.update("x" * 50)
        assert "x" * 15 + "..." in stream.getvalue()
        assert "x" * 16 not in stream.getvalue()

    def test_hide_clears(self):
        """hide() clears the row and marks the line invisible."""
        stream = io.StringIO()
        status = StatusLine(stream=stream, width=40)
        status.show()
        status.hide()
        assert not status.visible
        assert stream.getvalue().endswith(ANSI_CLEAR_LINE)
