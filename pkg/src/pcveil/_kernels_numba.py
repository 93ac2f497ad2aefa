"""Numba-jitted kernels (default backend).

Explicit per-point loops: they avoid the temporaries of broadcast numpy and
keep the k-nearest-neighbor search O(p^2) in time but O(k) in memory per
point.  Operation order matches the numpy fallback so results agree
bit-for-bit on linear maps and neighbor statistics.
"""

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def linear_map(x, y, z, m):
    n = x.shape[0]
    ox = np.empty(n, dtype=np.float64)
    oy = np.empty(n, dtype=np.float64)
    oz = np.empty(n, dtype=np.float64)
    m00, m01, m02 = m[0, 0], m[0, 1], m[0, 2]
    m10, m11, m12 = m[1, 0], m[1, 1], m[1, 2]
    m20, m21, m22 = m[2, 0], m[2, 1], m[2, 2]
    for i in range(n):
        xi, yi, zi = x[i], y[i], z[i]
        ox[i] = m00 * xi + m01 * yi + m02 * zi
        oy[i] = m10 * xi + m11 * yi + m12 * zi
        oz[i] = m20 * xi + m21 * yi + m22 * zi
    return ox, oy, oz


@njit(cache=True)
def twist_map(x, y, z, theta):
    n = x.shape[0]
    ox = np.empty(n, dtype=np.float64)
    oy = np.empty(n, dtype=np.float64)
    oz = np.empty(n, dtype=np.float64)
    for i in range(n):
        ang = theta * z[i]
        c = math.cos(ang)
        s = math.sin(ang)
        ox[i] = c * x[i] - s * y[i]
        oy[i] = s * x[i] + c * y[i]
        oz[i] = z[i]
    return ox, oy, oz


@njit(cache=True)
def knn_mean_dists(x, y, z, k):
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    buf = np.empty(k, dtype=np.float64)
    for i in range(n):
        for t in range(k):
            buf[t] = np.inf
        xi, yi, zi = x[i], y[i], z[i]
        for j in range(n):
            if j == i:
                continue
            dx = xi - x[j]
            dy = yi - y[j]
            dz = zi - z[j]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < buf[k - 1]:
                # insertion keeps the buffer sorted ascending
                t = k - 1
                while t > 0 and buf[t - 1] > d2:
                    buf[t] = buf[t - 1]
                    t -= 1
                buf[t] = d2
        s = 0.0
        for t in range(k):
            s += math.sqrt(buf[t])
        out[i] = s / k
    return out
