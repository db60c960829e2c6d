"""Dubbing adapters — file formats and audio I/O."""
