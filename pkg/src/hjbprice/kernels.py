"""Backend selection for the policy-iteration sweep.

The compiled extension is used when importable; setting the environment
variable ``HJBPRICE_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _sweep_py

__all__ = ["BACKEND", "policy_sweep", "get_backend", "available_backends"]

_compiled = None
if os.environ.get("HJBPRICE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _sweep as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name: str | None = None):
    """Return the ``policy_sweep`` callable for ``name`` (default: best available)."""
    if name is None:
        name = BACKEND
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled sweep kernel is not available")
        return _compiled.policy_sweep
    if name == "python":
        return _sweep_py.policy_sweep
    raise ValueError(f"unknown backend {name!r}")


BACKEND = "compiled" if _compiled is not None else "python"
policy_sweep = get_backend(BACKEND)
