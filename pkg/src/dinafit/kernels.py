"""Sweep-kernel backend selection.

The compiled backend (``dinafit._sweeps``, Cython) is used when its
extension module imported successfully; otherwise the pure-numpy fallback
takes over.  ``DINAFIT_KERNELS=python|cython`` forces a choice, and every
entry point also accepts an explicit backend name.  Both backends satisfy
the same contracts and are exercised by the same test suite;
``python -m dinafit.bench`` compares their speed.
"""

from __future__ import annotations

import os

from . import _sweeps_py
from .errors import ConfigError

try:
    from . import _sweeps as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_BACKENDS = {"python": _sweeps_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

_ENV_BACKEND = "DINAFIT_KERNELS"
_ENV_THREADS = "DINAFIT_THREADS"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def default_backend_name() -> str:
    forced = os.environ.get(_ENV_BACKEND)
    if forced:
        if forced not in _BACKENDS:
            raise ConfigError(
                f"{_ENV_BACKEND}={forced!r} is not available; "
                f"choose from {available_backends()}"
            )
        return forced
    return "cython" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    """Resolve a backend module by name (None: env override or best available)."""
    if name is None:
        name = default_backend_name()
    if name not in _BACKENDS:
        raise ConfigError(
            f"unknown kernel backend {name!r}; choose from {available_backends()}"
        )
    return _BACKENDS[name]


def resolve_threads(n_threads: int | None = None) -> int:
    """Thread count for row-parallel sweeps: explicit arg, env var, or CPU count."""
    if n_threads is not None:
        n = int(n_threads)
    else:
        env = os.environ.get(_ENV_THREADS)
        n = int(env) if env else (os.cpu_count() or 1)
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n
