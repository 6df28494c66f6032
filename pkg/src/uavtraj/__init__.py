"""Seedable UAV data-collection trajectory planning: simulator, SAC learner and advisor dispatch."""

__version__ = "0.1.0"
