"""Pure-numpy SDF evaluation and sphere tracer, fallback for the compiled kernel.

Scenes arrive packed as plain arrays (see ``scenekit.sdf.pack_scene``).
The arithmetic here matches the Cython tracer operation for operation, so
both backends produce identical distances and depths.
"""

from __future__ import annotations

import numpy as np

STATUS_MISS = 0
STATUS_HIT = 1
STATUS_DIVERGED = 2


def primitive_distances_packed(kinds, centers, params, pts):
    """Distance from each point (M, 3) to each primitive, as (M, K)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    n_prims = kinds.shape[0]
    dists = np.empty((pts.shape[0], n_prims), dtype=np.float64)
    for i in range(n_prims):
        p = pts - centers[i]
        a, b, c, d = params[i]
        kind = int(kinds[i])
        if kind == 0:  # sphere
            dists[:, i] = np.sqrt(p[:, 0] * p[:, 0] + p[:, 1] * p[:, 1]
                                  + p[:, 2] * p[:, 2]) - a
        elif kind == 1 or kind == 3:  # box / rounded box
            r = d if kind == 3 else 0.0
            qx = np.abs(p[:, 0]) - (a - r)
            qy = np.abs(p[:, 1]) - (b - r)
            qz = np.abs(p[:, 2]) - (c - r)
            ox = np.maximum(qx, 0.0)
            oy = np.maximum(qy, 0.0)
            oz = np.maximum(qz, 0.0)
            outside = np.sqrt(ox * ox + oy * oy + oz * oz)
            inside = np.minimum(np.maximum(qx, np.maximum(qy, qz)), 0.0)
            dists[:, i] = outside + inside - r
        elif kind == 2:  # torus, ring in the xy plane
            ring = np.sqrt(p[:, 0] * p[:, 0] + p[:, 1] * p[:, 1]) - a
            dists[:, i] = np.sqrt(ring * ring + p[:, 2] * p[:, 2]) - b
        else:
            raise ValueError(f"unknown kind code {kind}")
    return dists


def fold_union(dists: np.ndarray, blend: float) -> np.ndarray:
    """Smooth-union fold over the last axis, in primitive order."""
    acc = dists[..., 0]
    for i in range(1, dists.shape[-1]):
        di = dists[..., i]
        if blend > 0.0:
            h = np.clip(0.5 + 0.5 * (di - acc) / blend, 0.0, 1.0)
            acc = di * (1.0 - h) + acc * h - blend * h * (1.0 - h)
        else:
            acc = np.minimum(acc, di)
    return acc


def packed_sdf(kinds, centers, params, blend, pts):
    return fold_union(primitive_distances_packed(kinds, centers, params, pts),
                      blend)


def trace_rays(kinds, centers, params, blend, origins, dirs,
               t_start, t_max, max_steps: int, hit_eps: float):
    """March rays through the scene SDF.

    Returns (t, status) with status 0 = miss, 1 = hit, 2 = diverged
    (neither hit nor escaped within max_steps).
    """
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    n = origins.shape[0]
    t = np.full(n, float(t_start), dtype=np.float64)
    status = np.full(n, STATUS_DIVERGED, dtype=np.int32)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        pts = origins[idx] + t[idx, None] * dirs[idx]
        d = packed_sdf(kinds, centers, params, blend, pts)
        hit = d < hit_eps
        status[idx[hit]] = STATUS_HIT
        active[idx[hit]] = False
        t[idx] += np.where(hit, 0.0, d)
        escaped = t[idx] > t_max
        lost = escaped & ~hit
        status[idx[lost]] = STATUS_MISS
        active[idx[lost]] = False
    return t, status
