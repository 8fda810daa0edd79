"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise
the numpy fallback in ``_pykernels`` is used.  Setting
``CONFSPHERES_PURE=1`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CONFSPHERES_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

jacobi_eigh = _impl.jacobi_eigh
elementary_symmetric = _impl.elementary_symmetric
stencil_residual = _impl.stencil_residual
jacobi_relax = _impl.jacobi_relax


def backends():
    """Mapping of every importable backend name to its module."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
