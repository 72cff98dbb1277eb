"""Hot kernels, compiled when the extension is built, numpy otherwise.

Set ``DEMJIT_PURE=1`` to force the numpy fallback.
"""

import os

from . import _numpy

try:
    if os.environ.get("DEMJIT_PURE"):
        raise ImportError("pure-Python kernels requested")
    from . import _ext
except ImportError:
    _ext = None

BACKENDS = {"numpy": _numpy}
if _ext is not None:
    BACKENDS["ext"] = _ext

DEFAULT = "ext" if _ext is not None else "numpy"


def get(name: str | None = None):
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable (have {sorted(BACKENDS)})") from None
