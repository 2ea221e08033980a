"""Collects one verdict line per acceptance criterion."""

from __future__ import annotations

import time
from contextlib import contextmanager

_results: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str, budget_s: float | None = None):
    """Record PASS/FAIL for ``number``; a runtime budget is part of the check."""
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        line = f"criterion {number}: FAIL  {title} ({elapsed:.2f} s): {type(exc).__name__}: {exc}"
        _results[number] = line
        print(line, flush=True)
        raise
    elapsed = time.perf_counter() - start
    if budget_s is not None and elapsed >= budget_s:
        line = f"criterion {number}: FAIL  {title} ({elapsed:.2f} s, budget {budget_s:g} s)"
        _results[number] = line
        print(line, flush=True)
        raise AssertionError(line)
    line = f"criterion {number}: PASS  {title} ({elapsed:.2f} s)"
    _results[number] = line
    print(line, flush=True)


def lines() -> list[str]:
    return [_results[k] for k in sorted(_results)]
