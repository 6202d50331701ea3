"""Backend selection for the shortest-path and centrality kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy/pure-Python ``_pykernels`` module.  Set ``CONDUIT_PURE_PYTHON=1`` to
force the fallback.
"""

import os

from . import _pykernels

python = _pykernels
compiled = None

if os.environ.get("CONDUIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else python
BACKEND = "cython" if active is compiled else "python"

sssp = active.sssp
source_load = active.source_load
source_dependency = active.source_dependency


def get(name: str | None = None):
    """Return a kernel module by name (``"cython"``, ``"python"`` or ``None`` for the active one)."""
    if name is None:
        return active
    if name == "python":
        return python
    if name == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
