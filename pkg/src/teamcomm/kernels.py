"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``TEAMCOMM_PURE=1`` to force the fallback (used by the test-suite and the
benchmark to compare both paths).
"""

from __future__ import annotations

import os

from teamcomm import _fallback

try:
    if os.environ.get("TEAMCOMM_PURE"):
        raise ImportError("pure-Python kernels requested")
    from teamcomm import _speedups as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

adjacent_pair_indices = _impl.adjacent_pair_indices
degree_spread = _impl.degree_spread
signed_rank_counts = _impl.signed_rank_counts
rank_sum_counts = _impl.rank_sum_counts
window_counts = _impl.window_counts


def compiled_module():
    """Return the compiled module or ``None`` if it was not built."""
    try:
        from teamcomm import _speedups
    except ImportError:
        return None
    return _speedups
