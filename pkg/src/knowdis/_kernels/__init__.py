"""Kernel backend selection.

Imports the compiled extension when present, otherwise the pure-Python
fallback. ``KNOWDIS_PURE=1`` forces the fallback (used by the parity
tests and the benchmark). Both backends produce bit-identical floats,
so pipeline output hashes do not depend on which one is active.
"""

import os

from . import pure as _pure

if os.environ.get("KNOWDIS_PURE") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
renormalize_rows = _impl.renormalize_rows
transe_epoch = _impl.transe_epoch
pair_cs = _impl.pair_cs
span_score = _impl.span_score


def backends():
    """Return the available backend modules keyed by name."""
    out = {"pure": _pure}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
