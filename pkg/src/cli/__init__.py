"""CLI module for subrefine."""

from .main import app

__all__ = ["app"]
