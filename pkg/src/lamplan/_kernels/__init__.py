"""Hot numeric kernels with a compiled core and a NumPy fallback.

The compiled extension (``lamplan._kernels._core``, built from Cython) is
preferred when importable; otherwise the pure-NumPy implementation in
``lamplan._kernels._numpy`` is used. Set ``LAMPLAN_KERNELS=numpy`` or
``LAMPLAN_KERNELS=compiled`` to force a backend (the latter raises if the
extension is missing). Both backends agree to float32 rounding; results are
deterministic for a fixed backend regardless of thread count.
"""

import os

from . import _numpy
from ..errors import ConfigError

try:
    from . import _core
except ImportError:
    _core = None

_requested = os.environ.get("LAMPLAN_KERNELS", "").strip().lower()
if _requested in ("", "auto"):
    _impl = _core if _core is not None else _numpy
elif _requested == "numpy":
    _impl = _numpy
elif _requested == "compiled":
    if _core is None:
        raise ImportError(
            "LAMPLAN_KERNELS=compiled but the lamplan._kernels._core extension "
            "is not built (install with the Cython extension enabled)"
        )
    _impl = _core
else:
    raise ConfigError(f"unknown LAMPLAN_KERNELS value: {_requested!r}")

BACKEND = "compiled" if _impl is _core else "numpy"

conv3d_k3 = _impl.conv3d_k3
conv3d_k1 = _impl.conv3d_k1
trilinear_resample = _impl.trilinear_resample


def available_backends() -> dict:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    out = {"numpy": _numpy}
    if _core is not None:
        out["compiled"] = _core
    return out
