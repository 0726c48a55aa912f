"""Quantized scene model and the ray/rectangle intersection semantics.

Every primitive is an axis-aligned rectangle with integer corners. A ray meets
the rectangle's supporting plane in floating point; the intersection point is
then floored to integers (the "ray-plane coordinates", rpc) and tested against
the rectangle bounds and the ray's depth range. Depth is measured along the
ray's principal axis from the ray origin. The scalar functions here and the
batched ``intersect_all`` perform the same float64 operations in the same
order, so they agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .qcore import ConfigurationError, OracleSpec

DEPTH_MAX = 2**31 - 1
# guards floor() against values like 3.9999999999 that are integers in exact arithmetic
SNAP_EPS = 1e-9
# far outside any world; keeps floored coordinates inside int64 for near-parallel rays
COORD_CLAMP = float(2**52)

Vec3i = tuple[int, int, int]
Vec3f = tuple[float, float, float]


@dataclass(frozen=True)
class Material:
    albedo: Vec3f = (0.8, 0.8, 0.8)
    mirror: bool = False
    emissive: Optional[Vec3f] = None


@dataclass(frozen=True)
class ScenePrimitive:
    id: int
    bounds_min: Vec3i
    bounds_max: Vec3i
    material: Material = field(default_factory=Material)

    def __post_init__(self):
        flat = [a for a in range(3) if self.bounds_min[a] == self.bounds_max[a]]
        if len(flat) != 1:
            raise ConfigurationError(
                f"primitive {self.id}: exactly one axis must be flat, got {len(flat)}")
        if any(self.bounds_min[a] > self.bounds_max[a] for a in range(3)):
            raise ConfigurationError(f"primitive {self.id}: min exceeds max")

    @property
    def plane_axis(self) -> int:
        return next(a for a in range(3) if self.bounds_min[a] == self.bounds_max[a])

    @property
    def plane(self) -> int:
        return self.bounds_min[self.plane_axis]

    def area(self) -> int:
        a = self.plane_axis
        u, v = [b for b in range(3) if b != a]
        return ((self.bounds_max[u] - self.bounds_min[u])
                * (self.bounds_max[v] - self.bounds_min[v]))


@dataclass(frozen=True)
class Ray:
    origin: Vec3i
    direction: Vec3f
    near: int = 0
    far: int = DEPTH_MAX

    def __post_init__(self):
        if not 0 <= self.near <= self.far:
            raise ConfigurationError(f"invalid clip range [{self.near}, {self.far}]")
        if not any(self.direction):
            raise ConfigurationError("ray direction must be non-zero")

    @property
    def principal_axis(self) -> int:
        d = self.direction
        return max(range(3), key=lambda a: (abs(d[a]), -a))

    @classmethod
    def towards(cls, origin: Vec3i, direction: Sequence[float], near: int = 0,
                far: int = DEPTH_MAX) -> "Ray":
        n = math.sqrt(sum(c * c for c in direction))
        return cls(tuple(int(c) for c in origin), tuple(float(c) / n for c in direction),
                   int(near), int(far))


@dataclass(frozen=True)
class PointLight:
    position: Vec3f
    intensity: Vec3f = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class RectLight:
    """Emitting axis-aligned rectangle; it does not take part in occlusion."""

    bounds_min: Vec3i
    bounds_max: Vec3i
    intensity: Vec3f = (1.0, 1.0, 1.0)

    @property
    def plane_axis(self) -> int:
        return next(a for a in range(3) if self.bounds_min[a] == self.bounds_max[a])


@dataclass(frozen=True)
class DirectionalLight:
    direction: Vec3f
    intensity: Vec3f = (1.0, 1.0, 1.0)


Light = Union[PointLight, RectLight, DirectionalLight]


@dataclass(frozen=True)
class Camera:
    position: Vec3i
    look_at: Vec3f
    fov: float = 60.0
    resolution: tuple[int, int] = (128, 128)  # (width, height)


@dataclass(frozen=True)
class PrimitiveArrays:
    """Column layout of the padded primitive list used by batched intersection."""

    axis: np.ndarray   # (N,) int
    plane: np.ndarray  # (N,) float
    lo: np.ndarray     # (N, 3) int
    hi: np.ndarray     # (N, 3) int
    raw_count: int

    @property
    def size(self) -> int:
        return self.axis.size


@dataclass
class Scene:
    cb: int
    primitives: list[ScenePrimitive]
    lights: list = field(default_factory=list)
    camera: Optional[Camera] = None
    name: str = "scene"

    def __post_init__(self):
        hi = 1 << self.cb
        for p in self.primitives:
            for c in p.bounds_min + p.bounds_max:
                if not 0 <= c < hi:
                    raise ConfigurationError(
                        f"primitive {p.id}: coordinate {c} outside [0, {hi})")
        for i, p in enumerate(self.primitives):
            if p.id != i:
                raise ConfigurationError(f"primitive ids must be 0..N-1 in order (got {p.id} at {i})")
        self._arrays: Optional[PrimitiveArrays] = None

    @property
    def raw_count(self) -> int:
        return len(self.primitives)

    @property
    def pb(self) -> int:
        """Index register width; the primitive list is padded to 2**pb."""
        return max(1, (max(self.raw_count, 1) - 1).bit_length())

    @property
    def padded_count(self) -> int:
        return 1 << self.pb

    @property
    def world_size(self) -> int:
        return 1 << self.cb

    def arrays(self) -> PrimitiveArrays:
        if self._arrays is None:
            n = self.padded_count
            axis = np.zeros(n, dtype=np.int64)
            plane = np.full(n, -1.0)
            # sentinels: empty bounds on every axis, so no rpc can be contained
            lo = np.ones((n, 3), dtype=np.int64)
            hi = np.zeros((n, 3), dtype=np.int64)
            for p in self.primitives:
                axis[p.id] = p.plane_axis
                plane[p.id] = float(p.plane)
                lo[p.id] = p.bounds_min
                hi[p.id] = p.bounds_max
            self._arrays = PrimitiveArrays(axis, plane, lo, hi, self.raw_count)
        return self._arrays

    def primitive(self, i: int) -> Optional[ScenePrimitive]:
        return self.primitives[i] if i < self.raw_count else None


# -- scalar intersection ------------------------------------------------------

def _rpc_scalar(origin, direction, axis: int, plane: float) -> Optional[Vec3i]:
    da = direction[axis]
    if da == 0.0:
        return None
    t = (plane - origin[axis]) / da
    if t < 0.0 or not math.isfinite(t):
        return None
    out = [0, 0, 0]
    for b in range(3):
        if b == axis:
            out[b] = int(plane)
        else:
            v = min(max(origin[b] + t * direction[b] + SNAP_EPS, -COORD_CLAMP), COORD_CLAMP)
            out[b] = math.floor(v)
    return tuple(out)


def eval_rpc(ray: Ray, prim: ScenePrimitive) -> Optional[Vec3i]:
    """Integer point where the ray meets the primitive's plane, or None when the
    ray is parallel to the plane or the plane lies behind the origin."""
    return _rpc_scalar(ray.origin, ray.direction, prim.plane_axis, float(prim.plane))


def verify_rpc(ray: Ray, prim: ScenePrimitive, rpc: Vec3i,
               depth_limit: int = DEPTH_MAX) -> tuple[bool, int]:
    D = ray.principal_axis
    depth = abs(rpc[D] - ray.origin[D])
    for a in range(3):
        below = rpc[a] < prim.bounds_min[a]
        above = rpc[a] > prim.bounds_max[a]
        assert not (below and above), "comparator pair cannot both fail"
        if below or above:
            return False, depth
    return ray.near <= depth <= min(ray.far, depth_limit), depth


def classical_intersect(ray: Ray, prim: Optional[ScenePrimitive],
                        depth_limit: int = DEPTH_MAX) -> tuple[bool, int]:
    """The intersection function i_r(p) restricted to a depth range: (hit, depth)."""
    if prim is None:
        return False, DEPTH_MAX
    rpc = eval_rpc(ray, prim)
    if rpc is None:
        return False, DEPTH_MAX
    return verify_rpc(ray, prim, rpc, depth_limit)


def hit_normal(ray: Ray, prim: ScenePrimitive) -> Vec3i:
    """Axis-aligned unit normal of the primitive, facing the incoming ray."""
    a = prim.plane_axis
    n = [0, 0, 0]
    n[a] = -1 if ray.direction[a] > 0 else 1
    return tuple(n)


# -- batched intersection -----------------------------------------------------

@dataclass
class RayHits:
    """Hit flags and depths of rays against every (padded) primitive.

    ``hit`` already includes the rays' own [near, far] range; the depth limit of
    a search is applied on top of it by ``build_oracle``.
    """

    hit: np.ndarray    # (R, N) bool
    depth: np.ndarray  # (R, N) int64, DEPTH_MAX where the plane is not reached


def intersect_all(origins: np.ndarray, directions: np.ndarray, near: np.ndarray,
                  far: np.ndarray, arrays: PrimitiveArrays, chunk: int = 1024) -> RayHits:
    origins = np.asarray(origins, dtype=np.int64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    near = np.asarray(near, dtype=np.int64).reshape(-1)
    far = np.asarray(far, dtype=np.int64).reshape(-1)
    R, N = origins.shape[0], arrays.size
    hit = np.zeros((R, N), dtype=bool)
    depth = np.full((R, N), DEPTH_MAX, dtype=np.int64)
    principal = np.argmax(np.abs(directions), axis=1)
    for s in range(0, R, chunk):
        e = min(R, s + chunk)
        o = origins[s:e].astype(float)                  # (r, 3)
        d = directions[s:e]                             # (r, 3)
        da = d[:, arrays.axis]                          # (r, N)
        oa = o[:, arrays.axis]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = (arrays.plane[None, :] - oa) / da
        ok = (da != 0.0) & (t >= 0.0) & np.isfinite(t)
        t = np.where(ok, t, 0.0)
        inside = ok.copy()
        rpc_d = np.zeros(da.shape, dtype=np.int64)
        pa = principal[s:e]
        for b in range(3):
            v = np.clip(o[:, b:b + 1] + t * d[:, b:b + 1] + SNAP_EPS, -COORD_CLAMP, COORD_CLAMP)
            coord = np.floor(v).astype(np.int64)
            coord = np.where(arrays.axis[None, :] == b, arrays.plane.astype(np.int64)[None, :], coord)
            inside &= (coord >= arrays.lo[None, :, b]) & (coord <= arrays.hi[None, :, b])
            sel = pa == b
            if sel.any():
                rpc_d[sel] = coord[sel]
        od = origins[s:e][np.arange(e - s), pa]
        dep = np.abs(rpc_d - od[:, None])
        dep = np.where(ok, dep, DEPTH_MAX)
        depth[s:e] = dep
        hit[s:e] = inside & (dep >= near[s:e, None]) & (dep <= far[s:e, None])
    return RayHits(hit=hit, depth=depth)


def ray_hits(ray: Ray, scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    h = intersect_all(np.array([ray.origin]), np.array([ray.direction]),
                      np.array([ray.near]), np.array([ray.far]), scene.arrays())
    return h.hit[0], h.depth[0]


def build_oracle(ray: Ray, scene: Scene, depth_limit: int = DEPTH_MAX,
                 hits: Optional[tuple[np.ndarray, np.ndarray]] = None) -> OracleSpec:
    """Marking of the primitives the ray intersects within [near, min(far, depth_limit)].

    ``hits`` may carry this ray's precomputed (hit, depth) rows.
    """
    hit, depth = hits if hits is not None else ray_hits(ray, scene)
    mask = hit & (depth <= depth_limit)
    return OracleSpec(
        n_qubits=scene.pb,
        predicate=lambda p: classical_intersect(ray, scene.primitive(p), depth_limit)[0],
        mask=mask,
    )
