# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sphere tracer. Must stay arithmetic-identical to reference.py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

STATUS_MISS = 0
STATUS_HIT = 1
STATUS_DIVERGED = 2


cdef inline double _clip01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef inline double _prim_dist(int kind, double px, double py, double pz,
                              double a, double b, double c, double d) nogil:
    cdef double qx, qy, qz, ox, oy, oz, outside, inside, ring, r
    if kind == 0:  # sphere
        return sqrt(px * px + py * py + pz * pz) - a
    elif kind == 1 or kind == 3:  # box / rounded box
        r = d if kind == 3 else 0.0
        qx = fabs(px) - (a - r)
        qy = fabs(py) - (b - r)
        qz = fabs(pz) - (c - r)
        ox = qx if qx > 0.0 else 0.0
        oy = qy if qy > 0.0 else 0.0
        oz = qz if qz > 0.0 else 0.0
        outside = sqrt(ox * ox + oy * oy + oz * oz)
        inside = qx
        if qy > inside:
            inside = qy
        if qz > inside:
            inside = qz
        if inside > 0.0:
            inside = 0.0
        return outside + inside - r
    else:  # torus
        ring = sqrt(px * px + py * py) - a
        return sqrt(ring * ring + pz * pz) - b


cdef inline double _scene_sdf(const int[:] kinds, const double[:, :] centers,
                              const double[:, :] params, double blend,
                              double x, double y, double z) nogil:
    cdef Py_ssize_t i
    cdef double acc, di, h
    acc = _prim_dist(kinds[0], x - centers[0, 0], y - centers[0, 1],
                     z - centers[0, 2], params[0, 0], params[0, 1],
                     params[0, 2], params[0, 3])
    for i in range(1, kinds.shape[0]):
        di = _prim_dist(kinds[i], x - centers[i, 0], y - centers[i, 1],
                        z - centers[i, 2], params[i, 0], params[i, 1],
                        params[i, 2], params[i, 3])
        if blend > 0.0:
            h = _clip01(0.5 + 0.5 * (di - acc) / blend)
            acc = di * (1.0 - h) + acc * h - blend * h * (1.0 - h)
        else:
            if di < acc:
                acc = di
    return acc


def trace_rays(kinds, centers, params, double blend, origins, dirs,
               double t_start, double t_max, int max_steps, double hit_eps):
    cdef const int[:] kinds_v = np.ascontiguousarray(kinds, dtype=np.int32)
    cdef const double[:, :] centers_v = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[:, :] params_v = np.ascontiguousarray(params, dtype=np.float64)
    cdef const double[:, :] o = np.ascontiguousarray(origins, dtype=np.float64)
    cdef const double[:, :] dr = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef Py_ssize_t n = o.shape[0]
    t_arr = np.full(n, t_start, dtype=np.float64)
    status_arr = np.full(n, STATUS_DIVERGED, dtype=np.int32)
    cdef double[:] t = t_arr
    cdef int[:] status = status_arr
    cdef Py_ssize_t ray
    cdef int step
    cdef double ti, d, x, y, z

    with nogil:
        for ray in range(n):
            ti = t_start
            for step in range(max_steps):
                x = o[ray, 0] + ti * dr[ray, 0]
                y = o[ray, 1] + ti * dr[ray, 1]
                z = o[ray, 2] + ti * dr[ray, 2]
                d = _scene_sdf(kinds_v, centers_v, params_v, blend, x, y, z)
                if d < hit_eps:
                    status[ray] = 1
                    break
                ti = ti + d
                if ti > t_max:
                    status[ray] = 0
                    break
            t[ray] = ti
    return t_arr, status_arr
