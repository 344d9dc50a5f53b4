"""Procedural signed-distance scenes.

A scene is a smooth union of a handful of colored primitives, all contained
in the unit cube [-1, 1]^3 with a safety margin. The SDF doubles as the
exact geometry oracle for tests: distances, hit points and normals can be
checked analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..kernels import reference

# Primitive kind codes shared with the tracing kernels.
KIND_CODES = {"sphere": 0, "box": 1, "torus": 2, "rounded_box": 3}

#: Primitives must fit in the unit cube with at least this margin.
CUBE_MARGIN = 0.05

MAX_PRIMITIVES = 6


@dataclass(frozen=True)
class Primitive:
    """One solid: a shape kind, placement, size parameters and a color.

    ``params`` is a 4-vector whose meaning depends on ``kind``:
      sphere       -> (radius, 0, 0, 0)
      box          -> (hx, hy, hz, 0) half extents
      torus        -> (major radius, minor radius, 0, 0), ring in the xy plane
      rounded_box  -> (hx, hy, hz, corner radius), outer half extents
    """

    kind: str
    center: tuple[float, float, float]
    params: tuple[float, float, float, float]
    albedo: tuple[float, float, float]

    def bounding_radius(self) -> float:
        p = self.params
        if self.kind == "sphere":
            return p[0]
        if self.kind in ("box", "rounded_box"):
            return math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
        if self.kind == "torus":
            return math.sqrt((p[0] + p[1]) ** 2 + p[1] * p[1])
        raise ValueError(f"unknown primitive kind {self.kind!r}")


@dataclass(frozen=True)
class SceneSpec:
    """A procedural scene: primitives blended by a smooth union."""

    primitives: tuple[Primitive, ...]
    blend_radius: float
    seed: int

    def validate(self) -> None:
        if not 1 <= len(self.primitives) <= MAX_PRIMITIVES:
            raise ValueError("scene must contain between 1 and 6 primitives")
        if self.blend_radius < 0:
            raise ValueError("blend radius must be non-negative")
        for prim in self.primitives:
            rho = prim.bounding_radius()
            for c in prim.center:
                if abs(c) + rho > 1.0 - CUBE_MARGIN + 1e-12:
                    raise ValueError(
                        f"primitive {prim.kind} at {prim.center} escapes the "
                        f"unit cube margin"
                    )

    def hard(self) -> "SceneSpec":
        """The same scene with a hard (min) union."""
        return replace(self, blend_radius=0.0)


def make_scene(seed: int, max_primitives: int = 4) -> SceneSpec:
    """Deterministically generate a scene from an integer seed."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if not 1 <= max_primitives <= MAX_PRIMITIVES:
        raise ValueError("max_primitives must be in [1, 6]")
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, max_primitives + 1))
    prims = []
    for _ in range(count):
        kind = str(rng.choice(["sphere", "box", "torus", "rounded_box"]))
        if kind == "sphere":
            r = float(rng.uniform(0.18, 0.45))
            params = (r, 0.0, 0.0, 0.0)
        elif kind == "box":
            h = rng.uniform(0.12, 0.38, size=3)
            params = (float(h[0]), float(h[1]), float(h[2]), 0.0)
        elif kind == "torus":
            major = float(rng.uniform(0.22, 0.42))
            minor = float(rng.uniform(0.06, min(0.16, 0.6 * major)))
            params = (major, minor, 0.0, 0.0)
        else:
            h = rng.uniform(0.14, 0.38, size=3)
            corner = float(rng.uniform(0.02, 0.5 * float(h.min())))
            params = (float(h[0]), float(h[1]), float(h[2]), corner)
        prim = Primitive(kind=kind, center=(0.0, 0.0, 0.0), params=params,
                         albedo=(0.0, 0.0, 0.0))
        rho = prim.bounding_radius()
        lim = 1.0 - CUBE_MARGIN - rho
        center = rng.uniform(-lim, lim, size=3)
        albedo = rng.uniform(0.1, 0.9, size=3)
        prims.append(replace(
            prim,
            center=(float(center[0]), float(center[1]), float(center[2])),
            albedo=(float(albedo[0]), float(albedo[1]), float(albedo[2])),
        ))
    blend = float(rng.uniform(0.0, 0.08))
    scene = SceneSpec(primitives=tuple(prims), blend_radius=blend, seed=seed)
    scene.validate()
    return scene


def pack_scene(scene: SceneSpec):
    """Flatten a SceneSpec into plain arrays for the tracing kernels."""
    kinds = np.array([KIND_CODES[p.kind] for p in scene.primitives],
                     dtype=np.int32)
    centers = np.array([p.center for p in scene.primitives], dtype=np.float64)
    params = np.array([p.params for p in scene.primitives], dtype=np.float64)
    albedo = np.array([p.albedo for p in scene.primitives], dtype=np.float64)
    return kinds, centers, params, albedo, float(scene.blend_radius)


def primitive_distances(scene: SceneSpec, points) -> np.ndarray:
    """Distances (M, K) from M points to each of the K primitives."""
    kinds, centers, params, _, _ = pack_scene(scene)
    dists = reference.primitive_distances_packed(kinds, centers, params, points)
    return dists[0] if np.asarray(points).ndim == 1 else dists


def scene_sdf(scene: SceneSpec, points) -> np.ndarray:
    """Signed distance of the blended scene at the given points."""
    kinds, centers, params, _, blend = pack_scene(scene)
    d = reference.packed_sdf(kinds, centers, params, blend, points)
    return d[0] if np.asarray(points).ndim == 1 else d


def scene_albedo(scene: SceneSpec, points) -> np.ndarray:
    """Albedo of the nearest primitive (ties break to the lower index)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dists = np.atleast_2d(primitive_distances(scene, pts))
    nearest = np.argmin(dists, axis=1)
    palette = np.array([p.albedo for p in scene.primitives], dtype=np.float64)
    out = palette[nearest]
    return out[0] if np.asarray(points).ndim == 1 else out


def sdf_eval(scene: SceneSpec, point) -> tuple[float, np.ndarray]:
    """Evaluate (signed distance, albedo) at one point."""
    p = np.asarray(point, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError("point must be finite")
    return float(scene_sdf(scene, p)), scene_albedo(scene, p)


def scene_normal(scene: SceneSpec, points, h: float = 1e-4) -> np.ndarray:
    """Unit outward normals from central-difference SDF gradients."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    grad = np.empty_like(pts)
    for axis in range(3):
        off = np.zeros(3)
        off[axis] = h
        grad[:, axis] = (scene_sdf(scene, pts + off)
                         - scene_sdf(scene, pts - off)) / (2.0 * h)
    norm = np.sqrt(np.sum(grad * grad, axis=1, keepdims=True))
    n = grad / np.maximum(norm, 1e-12)
    return n[0] if np.asarray(points).ndim == 1 else n
