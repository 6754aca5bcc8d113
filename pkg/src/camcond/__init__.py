"""camcond: compile camera-aligned pose/depth conditioning videos and
two-phase schedule manifests from depth, mask, motion and trajectory files.
"""
from . import (depthmesh, errors, geom, io_formats, metrics, motion_fit,
               pipeline, raster, scene_transfer, schedule, trajectory)

__version__ = "0.1.0"

__all__ = [
    "depthmesh", "errors", "geom", "io_formats", "metrics", "motion_fit",
    "pipeline", "raster", "scene_transfer", "schedule", "trajectory",
    "__version__",
]
