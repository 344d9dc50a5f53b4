"""Cameras: poses, look-at sampling on a spherical shell, and ray grids.

Conventions (used consistently by the ground-truth and field renderers):
  * world-to-camera: ``p_cam = R @ (p_world - position)``
  * camera axes: x right, y down, z forward; ``R`` rows are those axes.
  * pixel rays pass through pixel centers; depth is the ray parameter t
    along the unit direction, not the z coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Length of the flattened pose conditioning vector:
#: 9 rotation entries + 3 position + 4 intrinsics + 4 reserved zeros.
COND_DIM = 20


@dataclass(frozen=True)
class CameraPose:
    rotation: np.ndarray = field(repr=False)  # (3, 3) world-to-camera
    position: np.ndarray                      # (3,) world units
    fov_deg: float

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        pos = np.asarray(self.position, dtype=np.float64)
        if rot.shape != (3, 3) or pos.shape != (3,):
            raise ValueError("rotation must be 3x3 and position length 3")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-6:
            raise ValueError("rotation is not orthonormal within 1e-6")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "position", pos)

    def conditioning(self) -> np.ndarray:
        """Deterministic length-20 vector: extrinsics, intrinsics, zeros."""
        focal = 1.0 / (2.0 * math.tan(math.radians(self.fov_deg) / 2.0))
        vec = np.concatenate([
            self.rotation.reshape(-1),
            self.position,
            np.array([focal, focal, 0.5, 0.5]),
            np.zeros(4),
        ])
        assert vec.shape == (COND_DIM,)
        return vec

    def forward(self) -> np.ndarray:
        """Unit viewing direction in world coordinates."""
        return self.rotation[2]


def look_at_origin(position, fov_deg: float) -> CameraPose:
    """Camera at ``position`` looking at the world origin.

    The up hint is world +z; when the viewing direction is within 1e-3 of
    +-z the hint falls back to +x so the basis stays well defined.
    """
    pos = np.asarray(position, dtype=np.float64)
    fwd = -pos / np.linalg.norm(pos)
    z_axis = np.array([0.0, 0.0, 1.0])
    if min(np.linalg.norm(fwd - z_axis), np.linalg.norm(fwd + z_axis)) < 1e-3:
        up = np.array([1.0, 0.0, 0.0])
    else:
        up = z_axis
    x_cam = np.cross(fwd, up)
    x_cam = x_cam / np.linalg.norm(x_cam)
    y_cam = np.cross(fwd, x_cam)
    rot = np.stack([x_cam, y_cam, fwd])
    return CameraPose(rotation=rot, position=pos, fov_deg=float(fov_deg))


def sample_camera(seed: int, radius_lo: float = 1.5, radius_hi: float = 2.2,
                  fov_deg: float = 40.0) -> CameraPose:
    """Sample a pose uniformly on the spherical shell, looking at the origin.

    The direction is uniform on the sphere and the radius uniform in
    [radius_lo, radius_hi].
    """
    if not 0 < radius_lo <= radius_hi:
        raise ValueError("require 0 < radius_lo <= radius_hi")
    if not 10.0 <= fov_deg <= 90.0:
        raise ValueError("fov_deg must lie in [10, 90]")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    s = math.sqrt(max(0.0, 1.0 - z * z))
    direction = np.array([s * math.cos(phi), s * math.sin(phi), z])
    radius = rng.uniform(radius_lo, radius_hi)
    return look_at_origin(direction * radius, fov_deg)


def orbit_camera(elevation_deg: float, azimuth_deg: float, radius: float,
                 fov_deg: float = 40.0) -> CameraPose:
    """Pose on the orbital evaluation grid."""
    el = math.radians(elevation_deg)
    az = math.radians(azimuth_deg)
    pos = radius * np.array([
        math.cos(el) * math.cos(az),
        math.cos(el) * math.sin(az),
        math.sin(el),
    ])
    return look_at_origin(pos, fov_deg)


def ray_directions(camera: CameraPose, resolution: int) -> np.ndarray:
    """Unit world-space ray directions through every pixel center, (H, W, 3)."""
    h = w = int(resolution)
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    xs = (2.0 * (np.arange(w) + 0.5) / w - 1.0) * tan_half
    ys = (2.0 * (np.arange(h) + 0.5) / h - 1.0) * tan_half
    dx, dy = np.meshgrid(xs, ys)
    dirs_cam = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    dirs_cam /= np.linalg.norm(dirs_cam, axis=-1, keepdims=True)
    return dirs_cam @ camera.rotation  # (R^T d)^T rows
