"""Quantum barrier transmission of displaced number states: exact Wigner
dynamics against the truncated Wigner approximation.

Submodules load lazily so the command-line front end can configure thread
pools before numpy is imported.
"""

from ._version import __version__

_SUBMODULES = ("analytic", "cli", "core", "evolution", "experiments",
               "hamiltonians", "twa", "wigner")


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
