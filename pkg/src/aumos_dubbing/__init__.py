"""AumOS Dubbing — isochrony-aware translation that generates phonemes together with their durations."""

__version__ = "0.1.0"
__all__ = ["__version__"]
