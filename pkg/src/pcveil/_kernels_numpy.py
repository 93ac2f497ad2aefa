"""Pure-numpy kernels (fallback backend).

The arithmetic here is written with the same per-element operation order as
the numba kernels, so the two backends agree bit-for-bit on linear maps and
on k-nearest-neighbor statistics.  (Trig-based kernels may differ in the
last ulp because numpy's vectorized sin/cos are not the libm routines.)
"""

import numpy as np

NAME = "numpy"


def linear_map(x, y, z, m):
    """Apply a constant 3x3 matrix to coordinate arrays; returns new arrays."""
    ox = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    oy = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    oz = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    return ox, oy, oz


def twist_map(x, y, z, theta):
    """Rotate each point in the xy-plane by ``theta * z``; z is preserved."""
    ang = theta * z
    c = np.cos(ang)
    s = np.sin(ang)
    return c * x - s * y, s * x + c * y, z.copy()


def knn_mean_dists(x, y, z, k):
    """Mean Euclidean distance from each point to its k nearest neighbors."""
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    dz = z[:, None] - z[None, :]
    d2 = dx * dx + dy * dy + dz * dz
    np.fill_diagonal(d2, np.inf)
    nearest = np.sort(np.partition(d2, k - 1, axis=1)[:, :k], axis=1)
    # ascending summation order matches the numba kernel exactly
    return np.sum(np.sqrt(nearest), axis=1) / k
