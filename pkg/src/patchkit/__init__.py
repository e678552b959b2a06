"""Toolkit for patch dataset curation, keypoint detection, metric losses,
embedding compression and local descriptor evaluation."""

__version__ = "0.1.0"
