"""Locates the compiled kernels once; ``SUBSYSQEC_PURE=1`` forces the numpy fallback."""
import os

kernels = None
if os.environ.get("SUBSYSQEC_PURE") != "1":
    try:
        from . import _kernels as kernels
    except ImportError:  # pragma: no cover - extension not built
        kernels = None
