"""Layout-aware hybrid retrieval for legacy engineering archives."""

from .errors import EngSearchError

__version__ = "0.1.0"

__all__ = ["EngSearchError", "__version__"]
