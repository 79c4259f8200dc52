"""Backend selection for the simulation kernel.

The compiled extension is used when it was built; otherwise the numpy
fallback.  Set ``WEAKSOCIAL_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_BACKENDS = {"python": _pykernel.run_trial}
if _ckernel is not None:
    _BACKENDS["compiled"] = _ckernel.run_trial


def available_backends():
    return tuple(_BACKENDS)


def _default():
    wanted = os.environ.get("WEAKSOCIAL_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _BACKENDS:
            raise RuntimeError(f"WEAKSOCIAL_BACKEND={wanted!r} is not available "
                               f"(have: {', '.join(_BACKENDS)})")
        return wanted
    return "compiled" if "compiled" in _BACKENDS else "python"


BACKEND = _default()


def get_kernel(name=None):
    name = name or BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}") from None
