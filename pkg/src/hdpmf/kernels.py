"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback is
always available. Set HDPMF_BACKEND=python (or =native) to force a choice —
forcing `native` raises if the extension did not build.
"""

from __future__ import annotations

import os

from . import _fallback

_requested = os.environ.get("HDPMF_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _fallback
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "HDPMF_BACKEND=native but the compiled extension is not available"
            ) from None
        _impl = _fallback

run_epoch = _impl.run_epoch


def backend_name() -> str:
    """Which kernel implementation is active: 'native' or 'python'."""
    return _impl.NAME
