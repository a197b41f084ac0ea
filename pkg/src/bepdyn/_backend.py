"""Pick the compiled kernels when available.

``BEPDYN_PURE_PYTHON=1`` forces the fallback, which is also used when the
extension was not built.  ``BACKEND`` names the active choice.
"""
import os

from . import _pycore

if os.environ.get("BEPDYN_PURE_PYTHON", "").strip() not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    population_weights = _compiled.population_weights
    run_events = _compiled.run_events
    BACKEND = "compiled"
else:
    population_weights = _pycore.population_weights
    run_events = _pycore.run_events
    BACKEND = "python"

OK = _pycore.OK
CAP_EXCEEDED = _pycore.CAP_EXCEEDED
