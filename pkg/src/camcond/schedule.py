"""Two-phase conditioning schedule: depth+pose for the first few denoising
steps, pose-only afterwards.

Step 0 is the highest-noise step (normalized time t = 0).  The manifest
records both the step index and t so integrators counting time in either
direction can consume it.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .errors import InvalidFraction, InvalidSteps, StepOutOfRange

__all__ = ["ScheduleEntry", "ScheduleManifest", "build_schedule", "condition_at",
           "LABEL_DEPTH", "LABEL_POSE", "DEFAULT_DEPTH_FRACTION"]

LABEL_DEPTH = "pose+depth"
LABEL_POSE = "pose"
DEFAULT_DEPTH_FRACTION = 0.2

# relative frame-directory names a manifest entry points at
FRAMES_DIR = {LABEL_DEPTH: "pose_depth", LABEL_POSE: "pose"}


@dataclass(frozen=True)
class ScheduleEntry:
    step: int
    t: float            # normalized time in [0, 1], 0 = highest noise
    condition: str      # LABEL_DEPTH or LABEL_POSE
    frames: str         # relative path to the rendered condition sequence


@dataclass(frozen=True)
class ScheduleManifest:
    num_steps: int
    depth_fraction: float
    t_stop: float       # t of the last depth step; -inf when no depth phase
    entries: tuple

    @property
    def num_depth_steps(self) -> int:
        return sum(1 for e in self.entries if e.condition == LABEL_DEPTH)


def build_schedule(num_steps: int, depth_fraction: float = DEFAULT_DEPTH_FRACTION,
                   ) -> ScheduleManifest:
    """Label the first ceil(f*N) steps depth+pose, the rest pose-only.

    ceil (not floor) so any positive fraction yields at least one depth
    step; a zero-depth schedule must be requested explicitly with f = 0.
    """
    if not isinstance(num_steps, int) or num_steps < 1:
        raise InvalidSteps(f"num_steps must be a positive integer, got {num_steps}")
    if not 0.0 <= depth_fraction <= 1.0:
        raise InvalidFraction(f"depth_fraction must lie in [0, 1], got {depth_fraction}")

    n_depth = min(ceil(depth_fraction * num_steps), num_steps)
    entries = []
    for k in range(num_steps):
        t = k / (num_steps - 1) if num_steps > 1 else 0.0
        label = LABEL_DEPTH if k < n_depth else LABEL_POSE
        entries.append(ScheduleEntry(k, t, label, FRAMES_DIR[label]))
    t_stop = entries[n_depth - 1].t if n_depth > 0 else float("-inf")
    return ScheduleManifest(num_steps, depth_fraction, t_stop, tuple(entries))


def condition_at(manifest: ScheduleManifest, step: int) -> str:
    if not 0 <= step < manifest.num_steps:
        raise StepOutOfRange(f"step {step} outside [0, {manifest.num_steps})")
    return manifest.entries[step].condition
