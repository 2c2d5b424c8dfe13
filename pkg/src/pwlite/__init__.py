"""pwlite: static analysis and OpenMP parallelization for C programs."""

from importlib import resources

__version__ = "0.1.0"


def default_sysroot() -> str:
    """Path of the bundled stub-header directory."""
    return str(resources.files(__name__) / "sysroot")
