"""Ray-marching kernels: compiled Cython core with a numpy fallback.

The backend is chosen once at import time. Set ``TRIREC_KERNEL=python`` to
force the fallback (used by the parity tests and the benchmark).
"""

import os

from . import reference
from .reference import STATUS_DIVERGED, STATUS_HIT, STATUS_MISS

_forced = os.environ.get("TRIREC_KERNEL", "").lower()
_compiled = None
if _forced != "python":
    try:
        from . import _tracer as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None
if _forced == "compiled" and _compiled is None:
    raise ImportError("TRIREC_KERNEL=compiled but the Cython tracer is missing")


def backend_name() -> str:
    return "compiled" if _compiled is not None else "python"


def trace_rays(kinds, centers, params, blend, origins, dirs,
               t_start, t_max, max_steps=256, hit_eps=1e-4):
    impl = _compiled if _compiled is not None else reference
    return impl.trace_rays(kinds, centers, params, blend, origins, dirs,
                           float(t_start), float(t_max), int(max_steps),
                           float(hit_eps))
