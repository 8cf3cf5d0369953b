"""Kernel backend selection.

Prefers the compiled Cython core and falls back to the numpy
implementation when the extension is not built.  ``DRIVERID_KERNELS``
(``auto``/``compiled``/``python``) overrides the choice; ``compiled``
raises if the extension is unavailable.
"""

from __future__ import annotations

import os

_choice = os.environ.get("DRIVERID_KERNELS", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"DRIVERID_KERNELS must be auto, compiled or python, got {_choice!r}")

_impl = None
if _choice in ("auto", "compiled"):
    try:
        from . import _ck as _impl
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = None
if _impl is None:
    from . import _py as _impl

BACKEND: str = "compiled" if _impl.__name__.endswith("_ck") else "python"

split_sweep = _impl.split_sweep
group_tally = _impl.group_tally
GAIN_EPS: float = _impl.GAIN_EPS

__all__ = ["BACKEND", "split_sweep", "group_tally", "GAIN_EPS"]
