"""Exact ground-truth rendering of SDF scenes by sphere tracing.

Background conventions: depth 0, normal (0, 0, 0), mask 0, rgb white.
Depth is the ray parameter along the unit ray direction. Normals are unit
vectors in camera space. Shading is a fixed Lambertian headlight:
``albedo * (0.2 + 0.8 * max(0, n . l))`` with ``l`` pointing back at the
camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .camera import CameraPose, ray_directions
from .sdf import SceneSpec, pack_scene, scene_albedo, scene_normal

SCENE_RADIUS = math.sqrt(3.0)  # bounding sphere of the unit cube
HIT_EPS = 1e-4
MAX_STEPS = 256
BACKGROUND_RGB = (1.0, 1.0, 1.0)

VALID_RESOLUTIONS = (16, 32, 64, 128)


class RenderError(RuntimeError):
    pass


@dataclass
class ViewRecord:
    """One posed view: images plus the camera that produced them."""

    rgb: np.ndarray      # (H, W, 3) float32 in [0, 1]
    depth: np.ndarray    # (H, W) float32, world units, 0 on background
    normal: np.ndarray   # (H, W, 3) float32 camera-space unit vectors
    mask: np.ndarray     # (H, W) float32 in {0, 1}
    camera: CameraPose

    def validate(self, atol_normal: float = 1e-4) -> None:
        fg = self.mask > 0.5
        if fg.any():
            norms = np.linalg.norm(self.normal[fg], axis=-1)
            if np.max(np.abs(norms - 1.0)) > atol_normal:
                raise ValueError("foreground normals are not unit length")
            if np.min(self.depth[fg]) <= 0:
                raise ValueError("foreground depth must be positive")
        bg = ~fg
        if bg.any():
            if np.max(self.depth[bg], initial=0.0) != 0.0:
                raise ValueError("background depth must be zero")
            if np.max(np.abs(self.normal[bg]), initial=0.0) != 0.0:
                raise ValueError("background normals must be zero")


def render_ground_truth(scene: SceneSpec, camera: CameraPose,
                        resolution: int) -> ViewRecord:
    """Render exact RGB, depth, normal and mask images for one view."""
    if resolution not in VALID_RESOLUTIONS:
        raise ValueError(f"resolution must be one of {VALID_RESOLUTIONS}")
    h = w = resolution
    dirs = ray_directions(camera, resolution).reshape(-1, 3)
    origin = np.broadcast_to(camera.position, dirs.shape)
    dist = np.linalg.norm(camera.position)
    t_start = max(dist - SCENE_RADIUS, 0.0)
    t_max = dist + SCENE_RADIUS

    kinds, centers, params, _, blend = pack_scene(scene)
    t, status = kernels.trace_rays(kinds, centers, params, blend,
                                   origin, dirs, t_start, t_max,
                                   MAX_STEPS, HIT_EPS)

    diverged = status == kernels.STATUS_DIVERGED
    hit = status == kernels.STATUS_HIT
    n_div = int(diverged.sum())
    if n_div > 0.001 * max(1, n_div + int(hit.sum())):
        rows, cols = np.divmod(np.nonzero(diverged)[0][:16], w)
        raise RenderError(
            f"sphere tracing diverged on {n_div} rays, e.g. pixels "
            f"{list(zip(rows.tolist(), cols.tolist()))}"
        )

    rgb = np.ones((h * w, 3))
    depth = np.zeros(h * w)
    normal = np.zeros((h * w, 3))
    mask = np.zeros(h * w)

    if hit.any():
        pts = camera.position + t[hit, None] * dirs[hit]
        n_world = scene_normal(scene, pts)
        light = -dirs[hit]
        lambert = np.maximum(0.0, np.sum(n_world * light, axis=1))
        albedo = scene_albedo(scene, pts)
        rgb[hit] = albedo * (0.2 + 0.8 * lambert)[:, None]
        depth[hit] = t[hit]
        normal[hit] = n_world @ camera.rotation.T
        mask[hit] = 1.0

    record = ViewRecord(
        rgb=np.clip(rgb, 0.0, 1.0).reshape(h, w, 3).astype(np.float32),
        depth=depth.reshape(h, w).astype(np.float32),
        normal=normal.reshape(h, w, 3).astype(np.float32),
        mask=mask.reshape(h, w).astype(np.float32),
        camera=camera,
    )
    record.validate()
    return record
