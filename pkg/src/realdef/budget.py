"""Resource budget shared by all engine operations.

Decision procedures must abort rather than degrade: exceeding the state
budget or the deadline raises :class:`EngineLimit`, never a wrong verdict.
"""

from __future__ import annotations

import time
from contextlib import contextmanager


class EngineLimit(RuntimeError):
    """An operation exceeded the configured resource budget."""


_limits = {"max_states": 4_000_000, "deadline": None}


def max_states() -> int:
    return _limits["max_states"]


def charge(n_states: int, stage: str = "") -> None:
    """Fail fast when an intermediate automaton outgrows the budget."""
    if n_states > _limits["max_states"]:
        raise EngineLimit(
            f"{stage or 'operation'}: {n_states} states exceeds budget "
            f"of {_limits['max_states']}"
        )
    deadline = _limits["deadline"]
    if deadline is not None and time.monotonic() > deadline:
        raise EngineLimit(f"{stage or 'operation'}: time budget exhausted")


@contextmanager
def limits(max_states: int | None = None, timeout_secs: float | None = None):
    """Temporarily tighten the engine budget."""
    old = dict(_limits)
    if max_states is not None:
        _limits["max_states"] = max_states
    if timeout_secs is not None:
        _limits["deadline"] = time.monotonic() + timeout_secs
    try:
        yield
    finally:
        _limits.update(old)
