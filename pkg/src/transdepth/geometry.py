"""Closed-form projective geometry for translation-only camera motion.

The camera never rotates, so the image motion of a rigid scene is fully
described by the focus of expansion (FOE) and the per-pixel depth.  All
functions work with z-depth: distance along the optical axis, not
Euclidean ray length.  Pixel coordinates are continuous with pixel
centers at integer + 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Base class for geometric domain violations."""


class BehindCameraError(GeometryError):
    """A point or motion places the observed geometry behind the camera."""


class ZeroTranslationError(GeometryError):
    """The camera displacement has zero norm."""


class DisparityDivergenceError(GeometryError):
    """Zero disparity: depth is unbounded at this pixel."""


class GeometryViolationError(GeometryError):
    """Disparity too large for any positive depth at this pixel."""


@dataclass(frozen=True)
class PinholeCamera:
    """Pinhole intrinsics: focal length and principal point in pixels."""

    f: float
    u0: float
    v0: float
    width: int
    height: int

    def __post_init__(self):
        if not self.f > 0:
            raise GeometryError(f"focal length must be positive, got {self.f}")
        if not (0 <= self.u0 <= self.width and 0 <= self.v0 <= self.height):
            raise GeometryError(
                f"principal point ({self.u0}, {self.v0}) outside "
                f"{self.width}x{self.height} image"
            )

    @classmethod
    def from_fov(cls, width, height, fov_deg=90.0):
        """Camera with the given horizontal field of view and a centered
        principal point.  A 90 degree FOV gives f = width / 2 exactly."""
        if fov_deg == 90.0:
            f = width / 2.0  # canonical configuration, kept exact
        else:
            f = (width / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
        return cls(f=f, u0=width / 2.0, v0=height / 2.0, width=width, height=height)

    def pixel_grid(self):
        """(u, v) coordinate arrays of shape (height, width), pixel centers."""
        u = np.arange(self.width, dtype=np.float64) + 0.5
        v = np.arange(self.height, dtype=np.float64) + 0.5
        return np.meshgrid(u, v)


@dataclass(frozen=True)
class Translation:
    """Camera displacement between two frames, in meters."""

    m: np.ndarray
    V: float = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3,):
            raise GeometryError(f"translation must be a 3-vector, got shape {m.shape}")
        object.__setattr__(self, "m", m)
        norm = math.hypot(m[0], m[1], m[2])  # robust to underflow
        if norm == 0.0:
            raise ZeroTranslationError("zero-norm camera displacement")
        object.__setattr__(self, "V", norm)

    @property
    def mx(self):
        return float(self.m[0])

    @property
    def my(self):
        return float(self.m[1])

    @property
    def mz(self):
        return float(self.m[2])


class FoePoint:
    """Focus of expansion: a finite pixel, or a direction at infinity.

    Pure lateral motion pushes the FOE to infinity; it is then identified
    by a unit 2-vector (the point at infinity is the same for d and -d).
    """

    __slots__ = ("uv", "direction")

    def __init__(self, uv=None, direction=None):
        if (uv is None) == (direction is None):
            raise GeometryError("FoePoint needs exactly one of uv / direction")
        self.uv = None if uv is None else np.asarray(uv, dtype=np.float64)
        self.direction = (
            None if direction is None else np.asarray(direction, dtype=np.float64)
        )

    @classmethod
    def finite(cls, u, v):
        return cls(uv=(u, v))

    @classmethod
    def at_infinity(cls, direction):
        d = np.asarray(direction, dtype=np.float64)
        n = math.hypot(d[0], d[1])
        if n == 0.0:
            raise GeometryError("at-infinity FOE needs a nonzero direction")
        return cls(direction=d / n)

    @property
    def is_finite(self):
        return self.uv is not None

    def __repr__(self):
        if self.is_finite:
            return f"FoePoint.finite({self.uv[0]:.6g}, {self.uv[1]:.6g})"
        return f"FoePoint.at_infinity(({self.direction[0]:.6g}, {self.direction[1]:.6g}))"


@dataclass
class FlowField:
    """Per-pixel 2D displacement in pixels, with a validity mask."""

    du: np.ndarray
    dv: np.ndarray
    valid: np.ndarray

    def disparity(self):
        """Norm of the flow vector at every pixel."""
        return np.hypot(self.du, self.dv)


@dataclass
class DepthMap:
    """Per-pixel z-depth in meters.  Invalid pixels carry NaN and a False
    mask entry; rendered maps are valid everywhere."""

    z: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.valid is None:
            self.valid = np.ones(self.z.shape, dtype=bool)

    @property
    def width(self):
        return self.z.shape[1]

    @property
    def height(self):
        return self.z.shape[0]


def project_point(camera, X):
    """Project a 3D point (camera frame, meters) to pixel coordinates."""
    X = np.asarray(X, dtype=np.float64)
    if not X[2] > 0:
        raise BehindCameraError(f"point with z={X[2]} is behind the camera")
    return (
        camera.u0 + camera.f * X[0] / X[2],
        camera.v0 + camera.f * X[1] / X[2],
    )


def foe_from_translation(camera, t):
    """Focus of expansion of a translation: the projection of the
    displacement direction, or a point at infinity for lateral motion."""
    if t.mz != 0.0:
        return FoePoint.finite(
            camera.u0 + camera.f * t.mx / t.mz,
            camera.v0 + camera.f * t.my / t.mz,
        )
    return FoePoint.at_infinity((t.mx, t.my))


def analytic_flow(camera, depth, t):
    """Exact optical flow of a rigid scene under camera translation.

    `depth` is the z-depth at the reference frame; `t` is the camera
    displacement from the other frame to the reference frame.  The flow
    at pixel P is P_ref - P_other, so sampling the other frame at
    P - flow(P) reconstructs the reference frame.
    """
    z = depth.z if isinstance(depth, DepthMap) else np.asarray(depth, dtype=np.float64)
    if z.shape != (camera.height, camera.width):
        raise GeometryError(
            f"depth grid {z.shape} does not match camera "
            f"{camera.height}x{camera.width}"
        )
    u, v = camera.pixel_grid()
    if t.mz != 0.0:
        denom = z + t.mz
        valid = denom > 0
        safe = np.where(valid, denom, 1.0)
        factor = t.mz / safe
        foe = foe_from_translation(camera, t)
        du = factor * (u - foe.uv[0])
        dv = factor * (v - foe.uv[1])
        du = np.where(valid, du, 0.0)
        dv = np.where(valid, dv, 0.0)
    else:
        # Limit of the finite-FOE flow as mz -> 0: the image slides
        # opposite to the lateral displacement.
        du = np.broadcast_to(-camera.f * t.mx / z, z.shape).copy()
        dv = np.broadcast_to(-camera.f * t.my / z, z.shape).copy()
        valid = np.ones(z.shape, dtype=bool)
    if isinstance(depth, DepthMap):
        valid = valid & depth.valid
    return FlowField(du=du, dv=dv, valid=valid)


def disparity_from_depth(camera, P, Z, t):
    """Flow-vector norm at pixel P for a point at z-depth Z under
    translation t (displacement toward the reference frame)."""
    if not Z > 0:
        raise GeometryError(f"depth must be positive, got {Z}")
    if t.mz != 0.0:
        if Z + t.mz <= 0:
            raise BehindCameraError(
                f"point at depth {Z} passes behind the camera (mz={t.mz})"
            )
        foe = foe_from_translation(camera, t)
        r = math.hypot(P[0] - foe.uv[0], P[1] - foe.uv[1])
        return abs(t.mz) / (Z + t.mz) * r
    return camera.f * t.V / Z


def depth_from_disparity(camera, P, disparity, foe, V):
    """Invert disparity to z-depth given the FOE and the displacement norm.

    The closed form resolves the expansion case: the camera component
    along the optical axis points toward the reference frame (mz >= 0).
    A pure disparity norm cannot distinguish expansion from contraction.
    """
    if not V > 0:
        raise GeometryError(f"displacement norm must be positive, got {V}")
    if disparity == 0:
        raise DisparityDivergenceError("zero disparity: depth is unbounded")
    if disparity < 0:
        raise GeometryError(f"disparity must be nonnegative, got {disparity}")
    if foe.is_finite:
        delta = math.hypot(camera.u0 - foe.uv[0], camera.v0 - foe.uv[1])
        mz = V * camera.f / math.sqrt(camera.f**2 + delta**2)
        r = math.hypot(P[0] - foe.uv[0], P[1] - foe.uv[1])
        depth = mz * (r / disparity - 1.0)
    else:
        depth = camera.f * V / disparity
    if depth <= 0:
        raise GeometryViolationError(
            f"disparity {disparity} exceeds the pixel-to-FOE distance: "
            "no positive depth is consistent with it"
        )
    return depth


def depth_grid_from_disparity(camera, disparity, foe, V, min_disparity=0.0):
    """Vectorized depth recovery over a disparity grid.

    Returns (depth, valid): pixels with disparity <= min_disparity or a
    non-positive recovered depth are masked and carry NaN.
    """
    disparity = np.asarray(disparity, dtype=np.float64)
    valid = disparity > max(min_disparity, 0.0)
    safe = np.where(valid, disparity, 1.0)
    u, v = camera.pixel_grid()
    if foe.is_finite:
        delta = math.hypot(camera.u0 - foe.uv[0], camera.v0 - foe.uv[1])
        mz = V * camera.f / math.sqrt(camera.f**2 + delta**2)
        r = np.hypot(u - foe.uv[0], v - foe.uv[1])
        depth = mz * (r / safe - 1.0)
    else:
        depth = camera.f * V / safe
    valid &= depth > 0
    depth = np.where(valid, depth, np.nan)
    return depth, valid
