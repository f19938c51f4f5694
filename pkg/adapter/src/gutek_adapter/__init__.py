"""Stdin/stdout model server exposing a transformers checkpoint to gutek."""

from gutek_adapter.server import main, serve

__all__ = ["main", "serve"]
