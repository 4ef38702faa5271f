"""Kernel backend selection: compiled extension when available, numpy fallback.

Set TIDYPLAN_KERNELS=python or =native to force a backend; the default
(auto) prefers the compiled extension.  ``use_backend`` swaps at runtime,
which the parity tests and the kernel benchmark rely on.
"""

from __future__ import annotations

import importlib
import os

from . import pykern

# the sentinel-then-from-import pattern would satisfy hasattr and skip the
# submodule import entirely, so load by full name instead
try:
    _native = importlib.import_module(__name__ + "._native")
except ImportError:
    _native = None

_FORCED = os.environ.get("TIDYPLAN_KERNELS", "auto")
if _FORCED == "native" and _native is None:
    raise ImportError("TIDYPLAN_KERNELS=native but the compiled extension is missing")

_impl = pykern if (_FORCED == "python" or _native is None) else _native


def backend_name() -> str:
    return "native" if _impl is _native else "python"


def have_native() -> bool:
    return _native is not None


def use_backend(name: str) -> None:
    global _impl
    if name == "python":
        _impl = pykern
    elif name == "native":
        if _native is None:
            raise ValueError("compiled kernel extension not available")
        _impl = _native
    else:
        raise ValueError(f"unknown backend {name!r}")


def obb_overlap(*args):
    return _impl.obb_overlap(*args)


def point_in_obb(*args):
    return _impl.point_in_obb(*args)


def illegal_pairs(*args):
    return _impl.illegal_pairs(*args)


def oob_flags(*args):
    return _impl.oob_flags(*args)


def pair_label(*args):
    return _impl.pair_label(*args)


def feature_vector(*args):
    return _impl.feature_vector(*args)


def feature_rows(*args):
    return _impl.feature_rows(*args)


def placement_feasible(*args):
    return _impl.placement_feasible(*args)


def placement_mask(*args):
    return _impl.placement_mask(*args)


N_BASE_FEATURES = pykern.N_BASE_FEATURES
SECTOR_KINDS = pykern.SECTOR_KINDS
LABEL_ON = pykern.LABEL_ON
LABEL_UNDER = pykern.LABEL_UNDER
N_LABELS = pykern.N_LABELS
