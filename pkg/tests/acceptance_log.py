"""Collects one summary line per acceptance criterion."""

import contextlib
import time
from typing import Dict, List

LINES: Dict[int, str] = {}


class Criterion:
    def __init__(self, n: int, title: str):
        self.n, self.title = n, title
        self.notes: List[str] = []
        self.status = "PASS"

    def note(self, text: str) -> None:
        self.notes.append(text)


@contextlib.contextmanager
def criterion(n: int, title: str, skip_reason: str = ""):
    c = Criterion(n, title)
    t0 = time.monotonic()
    try:
        yield c
    except BaseException as e:
        # pytest.skip raises a BaseException subclass named Skipped
        c.status = "SKIP" if type(e).__name__ == "Skipped" else "FAIL"
        if c.status == "FAIL":
            c.note(f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}")
        else:
            c.note(str(e))
        raise
    finally:
        detail = "; ".join(c.notes)
        line = f"criterion {n} [{c.status}] {title} ({time.monotonic() - t0:.1f}s)"
        LINES[n] = line + (f": {detail}" if detail else "")
        print(LINES[n], flush=True)
