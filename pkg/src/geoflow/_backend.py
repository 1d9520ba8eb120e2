"""Select the compiled kernels when available, the pure-Python ones otherwise.

Set ``GEOFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_kernels

compiled_kernels = None
if os.environ.get("GEOFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:  # extension not built
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"
