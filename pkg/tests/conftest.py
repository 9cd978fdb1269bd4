from __future__ import annotations

import functools

# criterion number -> list of (label, passed, detail)
ACCEPTANCE: dict[int, list] = {}


def criterion(number: int, label: str):
    """Record the outcome of an acceptance check for the end-of-run summary."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE.setdefault(number, []).append((label, False, str(exc).splitlines()[0][:120]
                                                          if str(exc) else type(exc).__name__))
                raise
            ACCEPTANCE.setdefault(number, []).append((label, True, detail or ""))
        return inner
    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        notes = "; ".join(f"{label}: {'ok' if p else 'FAIL'}{' (' + d + ')' if d else ''}"
                          for label, p, d in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {notes}")
