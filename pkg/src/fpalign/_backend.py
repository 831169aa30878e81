"""Select the compiled extension core or the numpy fallback at import time.

Set FPALIGN_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-agreement tests).
"""

import os

if os.environ.get("FPALIGN_PURE_PYTHON"):
    from . import _core_np as core
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_np as core


def backend_name() -> str:
    return core.BACKEND
