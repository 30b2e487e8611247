"""Kernel selection: compiled Cython core when available, else pure Python.

Set ``QNET_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
the parity tests).
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("QNET_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

label_bonds = _impl.label_bonds
nz_bond_sweep = _impl.nz_bond_sweep
nz_site_sweep = _impl.nz_site_sweep

__all__ = ["BACKEND", "label_bonds", "nz_bond_sweep", "nz_site_sweep"]
