"""Worker-count control shared by the parallel helpers."""

import os


def worker_count() -> int:
    """Number of worker threads, capped by the PERRONLAB_THREADS env var."""
    cap = os.environ.get("PERRONLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, min(n, 8))
