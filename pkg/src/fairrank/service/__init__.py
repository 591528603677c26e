"""HTTP service wrapping the ranking toolkit."""

from .app import app

__all__ = ["app"]
