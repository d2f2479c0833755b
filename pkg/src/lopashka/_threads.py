"""Worker-count resolution and a deterministic parallel map.

The environment variable ``LOPASHKA_THREADS`` provides a default worker
cap; an explicit function argument (the CLI ``--threads`` flag) overrides
it.  Reductions over parallel results must stay deterministic, so
:func:`parallel_map` always returns results in input order.
"""

import concurrent.futures
import os

__all__ = ["resolve_threads", "parallel_map"]


def resolve_threads(flag=None):
    """Return the worker count: flag beats env var beats 1."""
    if flag is not None:
        n = int(flag)
    else:
        n = int(os.environ.get("LOPASHKA_THREADS", "1"))
    if n < 1:
        n = 1
    return n


def parallel_map(fn, items, threads=1):
    """Map ``fn`` over ``items`` preserving order.

    With ``threads == 1`` this is a plain loop, which keeps tracebacks
    readable and avoids pool startup cost on small sweeps.
    """
    if threads <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
