"""Working-set accounting used to compare execution modes.

The tracker counts *entries* resident in Python-side collections. Two numbers
matter: `peak_entries` (high-water of live acquisitions) and
`allocated_entries` (monotone total). In-memory algebra owns the size of every
array it materializes for that array's lifetime (released when the object is
collected), so its peak grows with the largest intermediates. Streaming store
paths bracket their buffers with acquire/release, so their peak stays near the
configured batch size. Tracking is off unless a tracker is installed, and it
is thread-local.
"""

from __future__ import annotations

import threading
import weakref
from contextlib import contextmanager


class WorkingSetTracker:
    __slots__ = ("live_entries", "peak_entries", "allocated_entries")

    def __init__(self):
        self.live_entries = 0
        self.peak_entries = 0
        self.allocated_entries = 0

    def acquire(self, n: int) -> None:
        if n <= 0:
            return
        self.live_entries += n
        self.allocated_entries += n
        if self.live_entries > self.peak_entries:
            self.peak_entries = self.live_entries

    def release(self, n: int) -> None:
        if n <= 0:
            return
        self.live_entries = max(0, self.live_entries - n)

    def __repr__(self):
        return (
            f"WorkingSetTracker(live={self.live_entries}, "
            f"peak={self.peak_entries}, allocated={self.allocated_entries})"
        )


_state = threading.local()


def current() -> WorkingSetTracker | None:
    return getattr(_state, "tracker", None)


@contextmanager
def track():
    """Install a fresh tracker for the duration of the with-block."""
    prev = current()
    t = WorkingSetTracker()
    _state.tracker = t
    try:
        yield t
    finally:
        _state.tracker = prev


def acquire(n: int) -> None:
    t = current()
    if t is not None:
        t.acquire(n)


def release(n: int) -> None:
    t = current()
    if t is not None:
        t.release(n)


def acquire_owned(owner: object, n: int) -> None:
    """Charge n entries to the current tracker until `owner` is collected."""
    t = current()
    if t is not None and n > 0:
        t.acquire(n)
        weakref.finalize(owner, t.release, n)


@contextmanager
def owned(n: int):
    """Charge n entries for the duration of the with-block."""
    t = current()
    if t is not None and n > 0:
        t.acquire(n)
        try:
            yield
        finally:
            t.release(n)
    else:
        yield
