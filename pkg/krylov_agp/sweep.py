"""
Sweep dispatcher.

Points run on worker threads, at most ``threads`` at a time, and results
come back in input order regardless of completion order. A stop request
lets running points finish and skips the rest.
"""

from __future__ import annotations

import asyncio
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Generic, TypeVar

from krylov_agp.interrupt import SweepInterruptHandler
from krylov_agp.progress import SweepIndicator

logger = logging.getLogger(__name__)

__all__ = ["SweepOutcome", "dispatch", "run_sweep"]

P = TypeVar("P")
R = TypeVar("R")


@dataclass(frozen=True)
class SweepOutcome(Generic[R]):
    """Per-point results in input order; ``None`` marks a skipped point."""

    results: tuple[R | None, ...]
    interrupted: bool

    @property
    def completed_prefix(self) -> tuple[R, ...]:
        """Results up to the first skipped point."""
        out: list[R] = []
        for r in self.results:
            if r is None:
                break
            out.append(r)
        return tuple(out)


async def dispatch(
    points: Sequence[P],
    work: Callable[[P], R],
    threads: int = 1,
    stop: asyncio.Event | None = None,
    indicator: SweepIndicator | None = None,
) -> SweepOutcome[R]:
    """
    Evaluate ``work`` on every point through ``asyncio.to_thread``.

    The first failing point (in input order) cancels the points not yet
    started and its exception propagates.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    stop = stop or asyncio.Event()
    semaphore = asyncio.Semaphore(threads)

    async def run_one(point: P) -> R | None:
        async with semaphore:
            if stop.is_set():
                return None
            if indicator:
                indicator.point_started()
            try:
                return await asyncio.to_thread(work, point)
            finally:
                if indicator:
                    indicator.point_finished()

    tasks = [asyncio.create_task(run_one(p)) for p in points]
    if tasks:
        await asyncio.wait(tasks, return_when=asyncio.FIRST_EXCEPTION)
    failed = [t for t in tasks if t.done() and not t.cancelled() and t.exception()]
    if failed:
        for t in tasks:
            t.cancel()
        await asyncio.gather(*tasks, return_exceptions=True)
        first = min(failed, key=tasks.index)
        exc = first.exception()
        assert exc is not None
        raise exc
    results = tuple(t.result() for t in tasks)
    interrupted = any(r is None for r in results)
    if interrupted:
        done = sum(r is not None for r in results)
        logger.warning(f"sweep stopped early: {done}/{len(results)} points evaluated")
    return SweepOutcome(results=results, interrupted=interrupted)


def run_sweep(
    points: Sequence[P],
    work: Callable[[P], R],
    threads: int = 1,
    label: str = "sweep",
    progress_config: dict[str, object] | None = None,
) -> SweepOutcome[R]:
    """
    Blocking entry point: installs the Ctrl+C handler and the progress
    indicator around ``dispatch``.
    """

    async def main() -> SweepOutcome[R]:
        loop = asyncio.get_running_loop()
        stop = asyncio.Event()
        indicator = SweepIndicator(dict(progress_config or {}))

        def request_stop() -> None:
            indicator.mark_stopping()
            loop.call_soon_threadsafe(stop.set)

        with SweepInterruptHandler(on_stop=request_stop):
            indicator.start(label, len(points))
            logger.info(f"{label}: {len(points)} points on {threads} thread(s)")
            try:
                return await dispatch(points, work, threads, stop, indicator)
            finally:
                await indicator.stop()
                logger.info(indicator.format_final_summary())

    return asyncio.run(main())
