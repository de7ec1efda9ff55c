"""Pick the compiled stepping loop when it is built, else the Python one.

Set SCENARIO_FORGE_PURE=1 to force the Python loop.
"""

import os

if os.environ.get("SCENARIO_FORGE_PURE") == "1":
    from ._kernel_py import run
    BACKEND = "python"
else:
    try:
        from ._kernel import run
        BACKEND = "cython"
    except ImportError:
        from ._kernel_py import run
        BACKEND = "python"

__all__ = ["run", "BACKEND"]
