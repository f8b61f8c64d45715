"""Python bindings for the attire-anomaly engine core."""

try:
    from ._attire import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _attire import *  # noqa: F401,F403  (build-tree layout)
