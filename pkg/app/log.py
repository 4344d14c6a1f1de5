"""Logging du toolkit: stderr, messages courts avec glyphes (✓ ⚠ ✗)."""

import logging
import sys

_ROOT = "app"
_configured = False


def configure(level: str = "INFO") -> None:
    """Installe le handler stderr sur le logger racine du package."""
    global _configured
    root = logging.getLogger(_ROOT)
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(level.upper())


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)
