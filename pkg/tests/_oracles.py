"""Independent brute-force oracles used to freeze expected values.

These deliberately avoid the library's solver paths: exhaustive simplex-grid
search for small quadratic programs and Monte Carlo quadrature for the
cell-average diagonal rule.
"""

from __future__ import annotations

import numpy as np


def simplex_grid_min(K: np.ndarray, f: np.ndarray, step: float = 1e-3) -> float:
    """Exhaustive minimum of x'Kx + 2 f'x over the step-grid of the simplex.

    Supports up to 4 variables; the 4-variable case is evaluated chunk-wise
    as a closed-form polynomial in two grid axes to stay in numpy.
    """
    m = K.shape[0]
    n_steps = int(round(1.0 / step))
    t = np.arange(n_steps + 1) / n_steps
    if m == 1:
        return float(K[0, 0] + 2 * f[0])
    if m == 2:
        w1 = t
        w2 = 1.0 - w1
        obj = K[0, 0] * w1**2 + K[1, 1] * w2**2 + 2 * K[0, 1] * w1 * w2
        obj += 2 * (f[0] * w1 + f[1] * w2)
        return float(obj.min())
    if m == 3:
        w1, w2 = np.meshgrid(t, t, indexing="ij")
        w3 = 1.0 - w1 - w2
        ok = w3 >= -1e-12
        obj = (
            K[0, 0] * w1**2
            + K[1, 1] * w2**2
            + K[2, 2] * w3**2
            + 2 * (K[0, 1] * w1 * w2 + K[0, 2] * w1 * w3 + K[1, 2] * w2 * w3)
            + 2 * (f[0] * w1 + f[1] * w2 + f[2] * w3)
        )
        return float(obj[ok].min())
    if m == 4:
        best = np.inf
        w2g, w3g = np.meshgrid(t, t, indexing="ij")
        for a in t:
            rem = 1.0 - a
            w2 = w2g
            w3 = w3g
            w4 = rem - w2 - w3
            ok = w4 >= -1e-12
            if not ok.any():
                continue
            obj = (
                K[0, 0] * a**2
                + K[1, 1] * w2**2
                + K[2, 2] * w3**2
                + K[3, 3] * w4**2
                + 2
                * (
                    K[0, 1] * a * w2
                    + K[0, 2] * a * w3
                    + K[0, 3] * a * w4
                    + K[1, 2] * w2 * w3
                    + K[1, 3] * w2 * w4
                    + K[2, 3] * w3 * w4
                )
                + 2 * (f[0] * a + f[1] * w2 + f[2] * w3 + f[3] * w4)
            )
            cand = float(obj[ok].min())
            if cand < best:
                best = cand
        return best
    raise ValueError("grid oracle supports at most 4 variables")


def mc_ball_average(dim: int, alpha: float, radius: float, n_samples: int, seed: int) -> float:
    """Monte Carlo mean of |y|^(alpha-dim) over the ball of given radius."""
    rng = np.random.default_rng(seed)
    # Radial CDF of the uniform ball: r = radius * U^(1/dim).
    r = radius * rng.random(n_samples) ** (1.0 / dim)
    return float(np.mean(r ** (alpha - dim)))
