"""Forwarding-kernel selection.

Prefers the compiled extension; falls back to the pure-Python twin when
the extension was not built.  Set FIELDPATHS_PURE_PYTHON=1 to force the
fallback (used by the parity tests and the benchmark).
"""

import os

if os.environ.get("FIELDPATHS_PURE_PYTHON"):
    from . import _fwdpure as _impl
    IMPLEMENTATION = "pure"
else:
    try:
        from . import _fwdcore as _impl
        IMPLEMENTATION = "compiled"
    except ImportError:
        from . import _fwdpure as _impl
        IMPLEMENTATION = "pure"

run_stretch = _impl.run_stretch

REASON_RAN_ALL = 0
REASON_DYING = 1
REASON_MISMATCH = 2
