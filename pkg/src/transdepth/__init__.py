"""Depth from translation-only monocular video.

Synthetic box-world rendering with ground-truth depth, closed-form
flow/depth geometry for rotation-free camera motion, a small multi-scale
depth network trained end to end, and the classical flow-based pipeline
it is measured against.
"""

__version__ = "0.1.0"
