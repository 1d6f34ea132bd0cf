"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled extension is selected at import when available; ``IMPL``
reports which one is active. Both implementations are bit-identical
(shared RNG and arithmetic), verified by the test suite.
"""
from . import pure

try:
    from . import _native as _impl

    IMPL = "native"
except ImportError:  # extension not built; fall back
    _impl = pure
    IMPL = "python"

value_iteration = _impl.value_iteration
greedy_from_values = _impl.greedy_from_values
q_learning = _impl.q_learning

__all__ = ["IMPL", "pure", "value_iteration", "greedy_from_values", "q_learning"]
