import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "CONFSPHERES_THREADS"


def worker_count(requested=None):
    """Requested worker count, capped by ``CONFSPHERES_THREADS`` when set."""
    n = 1 if requested is None else max(1, int(requested))
    cap = os.environ.get(ENV_THREADS)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]``, possibly threaded; output keeps input order."""
    items = list(items)
    w = worker_count(workers)
    if w <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
