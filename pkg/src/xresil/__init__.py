"""Cross-layer resilience analysis of submarine cables and the IP links riding them."""

from __future__ import annotations

__version__ = "0.1.0"
