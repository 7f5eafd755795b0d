"""Small-noise ergodic control laboratory.

Degenerate diffusions dX = (-V'(X) + u) dt + eps dW, their metastable
landscape decomposition, the limiting jump chain, the ergodic HJB solver,
and the quantitative verification checks, all backed by the C++ core.
"""

from ergolab._core import *  # noqa: F401,F403

__version__ = "0.1.0"
