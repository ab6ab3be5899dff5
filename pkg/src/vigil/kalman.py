"""Constant-velocity Kalman filter over box observations.

State is x = [u, v, s, r, du, dv, ds]: box center (u, v), area s, aspect
ratio r = width / height, plus per-frame velocities of the first three.
Aspect ratio is modeled as constant.  Measurements are z = [u, v, s, r]
with H = [I4 | 0].
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import BoundingBox

# dt = 1 frame: u += du, v += dv, s += ds, r unchanged.
_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0

DEFAULT_Q = np.diag([1e-2, 1e-2, 1e-2, 1e-4, 1e-2, 1e-2, 1e-4])
DEFAULT_R = np.diag([1.0, 1.0, 10.0, 10.0])
# Velocities start unobserved, hence the large tail diagonal.
DEFAULT_P0 = np.diag([10.0, 10.0, 10.0, 10.0, 1e3, 1e3, 1e3])

_SIZE_FLOOR = 1e-4  # lower clamp for area and aspect ratio


def bbox_to_z(box: BoundingBox) -> np.ndarray:
    """Corner-format box -> measurement vector [u, v, s, r]."""
    w = box.x2 - box.x1
    h = box.y2 - box.y1
    if w <= 0.0 or h <= 0.0:
        raise ValueError(f"box must have positive area: {box.as_tuple()}")
    return np.array([box.x1 + 0.5 * w, box.y1 + 0.5 * h, w * h, w / h])


def z_to_bbox(z) -> BoundingBox:
    """Inverse of bbox_to_z: w = sqrt(s * r), h = s / w."""
    u, v, s, r = (float(z[i]) for i in range(4))
    w = math.sqrt(max(s * r, 0.0))
    if w <= 0.0:
        raise ValueError(f"non-positive size in state: s={s}, r={r}")
    h = s / w
    return BoundingBox(u - 0.5 * w, v - 0.5 * h, u + 0.5 * w, v + 0.5 * h)


class KalmanBoxFilter:
    """Tracks one box through time.

    predict() advances the state one frame and returns the predicted box;
    update() folds in a measured box.  covariance stays symmetric because
    every update re-symmetrizes it explicitly.
    """

    __slots__ = ("x", "P", "Q", "R")

    def __init__(self, box: BoundingBox, q=None, r=None, p0=None):
        self.x = np.zeros(7)
        self.x[:4] = bbox_to_z(box)
        self.Q = DEFAULT_Q.copy() if q is None else np.asarray(q, dtype=float).copy()
        self.R = DEFAULT_R.copy() if r is None else np.asarray(r, dtype=float).copy()
        self.P = DEFAULT_P0.copy() if p0 is None else np.asarray(p0, dtype=float).copy()

    def predict(self) -> BoundingBox:
        x = self.x
        x[:3] += x[4:]
        if x[2] <= 0.0:
            # area drifted non-positive: pin it and stop shrinking
            x[2] = _SIZE_FLOOR
            x[6] = 0.0
        self.P = _F @ self.P @ _F.T + self.Q
        return z_to_bbox(x)

    def update(self, box: BoundingBox) -> None:
        z = bbox_to_z(box)
        x, P = self.x, self.P
        innovation = z - x[:4]
        S = P[:4, :4] + self.R
        # K = P Ht S^-1; with H = [I4|0], P Ht is the first four columns of P
        K = np.linalg.solve(S, P[:, :4].T).T
        x += K @ innovation
        P = P - K @ P[:4, :]
        self.P = (P + P.T) * 0.5
        if x[2] < _SIZE_FLOOR:
            x[2] = _SIZE_FLOOR
        if x[3] < _SIZE_FLOOR:
            x[3] = _SIZE_FLOOR

    @property
    def bbox(self) -> BoundingBox:
        return z_to_bbox(self.x)
