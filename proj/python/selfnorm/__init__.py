"""Python bindings for the self-normalized tail statistics library."""

try:
    from ._selfnorm import *  # noqa: F401,F403  (installed layout)
except ImportError:
    from _selfnorm import *  # noqa: F401,F403  (build-tree layout)

__version__ = "0.1.0"
