import os


def thread_count() -> int:
    """Worker threads for curve fan-out; ``NEWSVENDOR_THREADS`` caps it."""
    raw = os.environ.get("NEWSVENDOR_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
