"""Stereo X-ray tomography simulation and line-fiducial tracking."""

try:
    from . import _core
except ImportError:  # pragma: no cover - build-tree layouts expose _core top level
    import _core

globals().update(
    {name: getattr(_core, name) for name in dir(_core) if not name.startswith("_")}
)

__all__ = [name for name in dir(_core) if not name.startswith("_")]
__version__ = "0.1.0"
