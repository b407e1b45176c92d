"""Kernel backend selection: compiled extension if available, NumPy otherwise.

``SDWTC_FORCE_PY=1`` forces the NumPy fallback (used by the parity tests and
the benchmark).
"""

import os

if os.environ.get("SDWTC_FORCE_PY") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND
cell_log_weights = kernels.cell_log_weights
typical_cells = kernels.typical_cells
