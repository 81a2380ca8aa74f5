"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``CREATORGAME_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from creatorgame import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CREATORGAME_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from creatorgame import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

brm_rewards = _impl.brm_rewards
brm_potential = _impl.brm_potential
topk_softmax_rewards = _impl.topk_softmax_rewards
ranked_weighted_sum = _impl.ranked_weighted_sum

__all__ = [
    "BACKEND",
    "brm_rewards",
    "brm_potential",
    "topk_softmax_rewards",
    "ranked_weighted_sum",
]
