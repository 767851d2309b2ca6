"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy reference implementation
is the fallback.  Set SPINDRIFT_PURE_PYTHON=1 to force the fallback (used by
the benchmark and the equivalence tests).
"""

import os

from . import _ref

BACKEND = "python"

if os.environ.get("SPINDRIFT_PURE_PYTHON") != "1":
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
else:
    _impl = _ref

weighted_d2_sums = _impl.weighted_d2_sums
zq_detuning_sums = _impl.zq_detuning_sums
be_relax_steps = _impl.be_relax_steps

reference = _ref
