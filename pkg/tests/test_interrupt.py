"""Tests for interrupt module."""

import signal

import pytest

from krylov_agp.interrupt import InterruptAction, SweepInterruptHandler


class FakeClock:
    def __init__(self):
        self.now = 100.0

    def __call__(self):
        return self.now


class TestEscalation:
    """Tests for the two-step Ctrl+C escalation."""

    def test_first_interrupt_stops_dispatch(self):
        """The first Ctrl+C stops dispatching."""
        handler = SweepInterruptHandler(clock=FakeClock())
        assert handler.next_action() is InterruptAction.STOP_DISPATCH
        assert handler.stopped

    def test_second_within_window_aborts(self):
        """A second Ctrl+C inside the window aborts."""
        clock = FakeClock()
        handler = SweepInterruptHandler(clock=clock)
        handler.next_action()
        clock.now += 1.0
        assert handler.next_action() is InterruptAction.ABORT

    def test_window_expiry_resets(self):
        """A late second Ctrl+C counts as a first one."""
        clock = FakeClock()
        handler = SweepInterruptHandler(clock=clock)
        handler.next_action()
        clock.now += 5.0
        assert handler.next_action() is InterruptAction.STOP_DISPATCH

    def test_handler_calls_on_stop(self, capsys):
        """The signal handler runs the stop callback and prints a hint."""
        calls = []
        handler = SweepInterruptHandler(on_stop=lambda: calls.append(1), clock=FakeClock())
        handler._handle_sigint(signal.SIGINT, None)
        assert calls == [1]
        assert "press again to abort" in capsys.readouterr().err

    def test_handler_raises_on_abort(self):
        """The escalated handler raises KeyboardInterrupt."""
        handler = SweepInterruptHandler(clock=FakeClock())
        handler._handle_sigint(signal.SIGINT, None)
        with pytest.raises(KeyboardInterrupt):
            handler._handle_sigint(signal.SIGINT, None)


class TestInstall:
    """Tests for installing and restoring the SIGINT handler."""

    def test_context_manager_restores(self):
        """The previous SIGINT handler is restored on exit."""
        original = signal.getsignal(signal.SIGINT)
        with SweepInterruptHandler() as handler:
            assert signal.getsignal(signal.SIGINT) == handler._handle_sigint
        assert signal.getsignal(signal.SIGINT) == original

    def test_install_is_idempotent(self):
        """Installing twice keeps the first saved handler."""
        original = signal.getsignal(signal.SIGINT)
        handler = SweepInterruptHandler()
        handler.install()
        handler.install()
        handler.uninstall()
        handler.uninstall()
        assert signal.getsignal(signal.SIGINT) == original
