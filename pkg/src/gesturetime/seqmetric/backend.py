"""Matcher backend selection: compiled kernel when available, else Python.

Set GESTURETIME_PURE_PYTHON=1 to force the pure-Python matcher (used by the
backend-parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _match_py

if os.environ.get("GESTURETIME_PURE_PYTHON") == "1":
    _impl = _match_py
    BACKEND = "python"
else:
    try:
        from . import _match_c as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _match_py
        BACKEND = "python"

match_monotone = _impl.match_monotone
