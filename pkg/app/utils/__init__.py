"""Utility modules for common operations."""

from app.utils.rng import StreamRole, child_rng, generator_identity

__all__ = ["StreamRole", "child_rng", "generator_identity"]
