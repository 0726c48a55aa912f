"""Hybrid renderer: per-ray quantum search, iterative depth minimisation,
neighbour gathering, early termination, and the lighting passes.

Three interchangeable intersection back ends share every pass:

* ``quantum``: QSearch over the primitive index register (simulated);
* ``randomized_classical``: classical tests against a random floor(sqrt(N)) subset;
* ``classical``: exhaustive tests, the deterministic reference.

Every random draw comes from a ``MeasureRng`` keyed by (pixel, pass, iteration)
so images do not depend on the worker count.
"""
from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    DEPTH_MAX,
    Camera,
    DirectionalLight,
    PointLight,
    Ray,
    RayHits,
    RectLight,
    Scene,
    _rpc_scalar,
    hit_normal,
    eval_rpc,
    intersect_all,
    ray_hits,
)
from .metrics import MetricsCounters
from .qcore import ConfigurationError, MeasureRng, OracleSpec
from .search import BACKENDS, QSearchConfig, fn_prob_qs, fn_prob_rc, qsearch, rc_miss_probability

MODES = ("classical", "quantum", "randomized_classical")

# stream ids of the passes; each keys its own MeasureRng family
PASS_PRIMARY = 0
PASS_SPECULAR = 1
PASS_DIRECT = 2
PASS_AREA = 3
PASS_VPL = 4
_AREA_POSITIONS = 10
_VPL_PATHS = 11
_TERMINATION = 1

SHADOW_NEAR = 1
VPL_CLAMP = 2.0
INDIRECT_GAIN = 25.0


@dataclass(frozen=True)
class RenderConfig:
    mode: str = "quantum"
    iterations: int = 4
    neighbor_opt: bool = False
    termination: bool = False
    direct_iterations: int = 2
    light_samples: int = 1
    vpl_count: int = 0
    seed: int = 0
    resolution: Optional[tuple[int, int]] = None  # (width, height); camera's when None
    workers: int = 1
    c: float = 1.8
    reflectance: float = 0.9
    backend: str = "subspace"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.direct_iterations < 1:
            raise ConfigurationError("direct_iterations must be >= 1")
        if self.light_samples < 1:
            raise ConfigurationError("light_samples must be >= 1")
        if self.vpl_count < 0:
            raise ConfigurationError("vpl_count must be >= 0")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.resolution is not None and (len(self.resolution) != 2 or min(self.resolution) < 1):
            raise ConfigurationError("resolution must be two positive integers")
        if not 0.0 <= self.reflectance <= 1.0:
            raise ConfigurationError("reflectance must lie in [0, 1]")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}")
        QSearchConfig(self.c)

    @property
    def search_config(self) -> QSearchConfig:
        return QSearchConfig(self.c)


# -- single-ray operations --------------------------------------------------------

@dataclass
class TraceResult:
    found: bool
    prim: int = -1
    point: Optional[tuple[int, int, int]] = None
    normal: Optional[tuple[int, int, int]] = None
    depth: int = DEPTH_MAX
    counters: MetricsCounters = field(default_factory=MetricsCounters)


def _never(_i: int) -> bool:
    return False


def _search_row(hit: np.ndarray, depth: np.ndarray, limit: int, rng: MeasureRng, mode: str,
                pb: int, raw: int, qcfg: QSearchConfig, backend: str) -> tuple[int, int, int, int]:
    """One intersection query on precomputed rows: (prim or -1, depth, evals, classical tests)."""
    if mode == "classical":
        valid = hit[:raw] & (depth[:raw] <= limit)
        if not valid.any():
            return -1, DEPTH_MAX, 0, raw
        d = np.where(valid, depth[:raw], DEPTH_MAX)
        p = int(np.argmin(d))  # first index among equal depths: storage order
        return p, int(d[p]), 0, raw
    mask = hit & (depth <= limit)
    if mode == "quantum":
        oracle = OracleSpec(pb, _never, mask=mask)
        out = qsearch(oracle, None, qcfg, rng, backend)
        if out.found:
            return out.index, int(depth[out.index]), out.eval_count, out.classical_checks
        return -1, DEPTH_MAX, out.eval_count, out.classical_checks
    n = mask.size
    best, best_depth = -1, DEPTH_MAX
    for p in rng.sample(n, math.isqrt(n)):
        if mask[p] and depth[p] < best_depth:
            best, best_depth = p, int(depth[p])
    return best, best_depth, 0, math.isqrt(n)


def _finish(ray: Ray, scene: Scene, p: int, d: int, ev: int, ci: int) -> TraceResult:
    counters = MetricsCounters(eval=ev, c_int=ci)
    if p < 0:
        return TraceResult(False, counters=counters)
    prim = scene.primitives[p]
    return TraceResult(True, p, eval_rpc(ray, prim), hit_normal(ray, prim), d, counters)


def qtrace(ray: Ray, scene: Scene, depth_limit: int = DEPTH_MAX, rng: Optional[MeasureRng] = None,
           cfg: Optional[RenderConfig] = None) -> TraceResult:
    """Find some primitive hit by ``ray`` at depth <= depth_limit with QSearch.

    A negative result may be a false negative; a positive one is always verified.
    """
    cfg = cfg or RenderConfig(mode="quantum")
    rng = rng or MeasureRng(cfg.seed)
    hit, depth = ray_hits(ray, scene)
    p, d, ev, ci = _search_row(hit, depth, depth_limit, rng, "quantum", scene.pb,
                               scene.raw_count, cfg.search_config, cfg.backend)
    return _finish(ray, scene, p, d, ev, ci)


def rc_intersect(ray: Ray, scene: Scene, depth_limit: int = DEPTH_MAX,
                 rng: Optional[MeasureRng] = None) -> TraceResult:
    """Nearest hit among a uniformly drawn floor(sqrt(N))-subset of the primitives."""
    rng = rng or MeasureRng(0)
    hit, depth = ray_hits(ray, scene)
    p, d, ev, ci = _search_row(hit, depth, depth_limit, rng, "randomized_classical", scene.pb,
                               scene.raw_count, QSearchConfig(), "subspace")
    return _finish(ray, scene, p, d, ev, ci)


def qoccluded(ray: Ray, scene: Scene, rng: Optional[MeasureRng] = None,
              cfg: Optional[RenderConfig] = None) -> tuple[bool, MetricsCounters]:
    """Whether anything blocks the ray inside its [near, far] range (no depth minimisation)."""
    res = qtrace(ray, scene, DEPTH_MAX, rng, cfg)
    return res.found, res.counters


def should_continue(sn: int, fn_estimate: float, rng: MeasureRng) -> bool:
    """Keep tracing after ``sn`` consecutive negatives with probability fn_estimate**sn."""
    # strict comparison so that fn_estimate = 0 always stops
    return rng.random() < fn_estimate ** sn


def fn_estimate(mode: str, n: int, c: float = 1.8) -> float:
    if mode == "quantum":
        return fn_prob_qs(n, QSearchConfig(c))
    if mode == "randomized_classical":
        if n >= 4:
            return fn_prob_rc(n)
        upper = n - math.isqrt(n)
        return sum(rc_miss_probability(n, t) for t in range(1, upper + 1)) / max(upper, 1)
    return 0.0


# -- ray batches and per-pass state -----------------------------------------------

@dataclass
class RayBatch:
    origins: np.ndarray     # (R, 3) int64
    directions: np.ndarray  # (R, 3) float
    near: np.ndarray        # (R,) int64
    far: np.ndarray         # (R,) int64
    pixel: np.ndarray       # (R,) flat pixel index

    def __len__(self) -> int:
        return self.pixel.size

    def ray(self, k: int) -> Ray:
        return Ray(tuple(int(c) for c in self.origins[k]), tuple(float(c) for c in self.directions[k]),
                   int(self.near[k]), int(self.far[k]))

    def intersect(self, scene: Scene) -> RayHits:
        return intersect_all(self.origins, self.directions, self.near, self.far, scene.arrays())

    @classmethod
    def empty(cls) -> "RayBatch":
        return cls(np.zeros((0, 3), np.int64), np.zeros((0, 3)), np.zeros(0, np.int64),
                   np.zeros(0, np.int64), np.zeros(0, np.int64))


@dataclass
class RenderMaps:
    """Per-ray records of one trace pass."""

    prim: np.ndarray    # (R,) visible primitive, -1 for none
    point: np.ndarray   # (R, 3) integer hit point
    normal: np.ndarray  # (R, 3) axis-aligned normal facing the ray
    depth: np.ndarray   # (R,) current depth threshold, DEPTH_MAX until a hit
    sn: np.ndarray      # (R,) consecutive negatives
    active: np.ndarray  # (R,) still tracing
    tie: np.ndarray     # (R,) several primitives share the true minimum depth

    @classmethod
    def empty(cls, n: int) -> "RenderMaps":
        return cls(np.full(n, -1, np.int64), np.zeros((n, 3), np.int64), np.zeros((n, 3), np.int64),
                   np.full(n, DEPTH_MAX, np.int64), np.zeros(n, np.int64), np.ones(n, bool),
                   np.zeros(n, bool))


@dataclass(frozen=True)
class IterationStats:
    pass_name: str
    iteration: int
    active: int
    found: int
    eval: int
    c_int: int
    cpix: int
    mismatched: int  # records whose primitive differs from the reference, -1 without one


def primary_rays(camera: Camera, resolution: Optional[tuple[int, int]] = None) -> RayBatch:
    """Pinhole camera rays through pixel centres, row-major from the top-left pixel."""
    w, h = resolution or camera.resolution
    pos = np.asarray(camera.position, float)
    fwd = np.asarray(camera.look_at, float) - pos
    fwd /= np.linalg.norm(fwd)
    up_hint = np.array([0.0, 1.0, 0.0]) if abs(fwd[1]) < 0.999 else np.array([0.0, 0.0, -1.0])
    right = np.cross(fwd, up_hint)
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)
    half = math.tan(math.radians(camera.fov) / 2.0)
    xs = (2.0 * (np.arange(w) + 0.5) / w - 1.0) * half * (w / h)
    ys = (1.0 - 2.0 * (np.arange(h) + 0.5) / h) * half
    u, v = np.meshgrid(xs, ys)
    d = fwd[None, :] + u.reshape(-1, 1) * right[None, :] + v.reshape(-1, 1) * up[None, :]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    n = w * h
    return RayBatch(np.tile(np.asarray(camera.position, np.int64), (n, 1)), d,
                    np.zeros(n, np.int64), np.full(n, DEPTH_MAX, np.int64), np.arange(n))


def reflected_rays(batch: RayBatch, maps: RenderMaps, scene: Scene) -> RayBatch:
    """One mirror bounce for every record whose visible primitive is a mirror."""
    sel = [k for k in range(len(batch))
           if maps.prim[k] >= 0 and scene.primitives[maps.prim[k]].material.mirror]
    if not sel:
        return RayBatch.empty()
    sel = np.asarray(sel)
    d = batch.directions[sel].copy()
    axis = np.argmax(np.abs(maps.normal[sel]), axis=1)
    d[np.arange(sel.size), axis] *= -1.0
    return RayBatch(maps.point[sel].copy(), d, np.full(sel.size, SHADOW_NEAR, np.int64),
                    np.full(sel.size, DEPTH_MAX, np.int64), batch.pixel[sel].copy())


# -- worker plumbing --------------------------------------------------------------

@dataclass
class _QueryContext:
    hit: np.ndarray
    depth: np.ndarray
    mode: str
    pb: int
    raw: int
    qcfg: QSearchConfig
    backend: str
    seed: int

    def run(self, job: tuple) -> tuple[int, int, int, int]:
        k, limit, stream = job
        rng = MeasureRng(self.seed, *stream)
        return _search_row(self.hit[k], self.depth[k], limit, rng, self.mode, self.pb, self.raw,
                           self.qcfg, self.backend)


_WORKER_CTX: Optional[_QueryContext] = None


def _worker_chunk(jobs: list) -> list:
    return [_WORKER_CTX.run(j) for j in jobs]


def _run_queries(ctx: _QueryContext, jobs: list, workers: int) -> list:
    """Evaluate queries, optionally across forked workers; results keep job order."""
    global _WORKER_CTX
    if workers <= 1 or len(jobs) < 2 * workers:
        return [ctx.run(j) for j in jobs]
    size = math.ceil(len(jobs) / workers)
    chunks = [jobs[i:i + size] for i in range(0, len(jobs), size)]
    _WORKER_CTX = ctx
    try:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            parts = pool.map(_worker_chunk, chunks)
    finally:
        _WORKER_CTX = None
    return [r for part in parts for r in part]


def _context(hits: RayHits, scene: Scene, cfg: RenderConfig, mode: Optional[str] = None) -> _QueryContext:
    return _QueryContext(hits.hit, hits.depth, mode or cfg.mode, scene.pb, scene.raw_count,
                         cfg.search_config, cfg.backend, cfg.seed)


# -- trace pass -------------------------------------------------------------------

def _ties(hits: RayHits, raw: int) -> np.ndarray:
    d = np.where(hits.hit[:, :raw], hits.depth[:, :raw], DEPTH_MAX)
    if raw == 0:
        return np.zeros(d.shape[0], bool)
    m = d.min(axis=1, keepdims=True)
    return (m[:, 0] < DEPTH_MAX) & (np.count_nonzero(d == m, axis=1) > 1)


def neigh_opt(grid: np.ndarray, maps: RenderMaps, hits: RayHits) -> tuple[int, int]:
    """Row-major in-place sweep adopting a 4-neighbour's primitive when it is hit
    strictly shallower. Returns (updated pixels, classical tests)."""
    h, w = grid.shape
    prim, depth = maps.prim, maps.depth
    hit_m, depth_m = hits.hit, hits.depth
    cpix = tests = 0
    for y in range(h):
        row = grid[y]
        for x in range(w):
            k = row[x]
            if k < 0:
                continue
            own = prim[k]
            seen = []
            updated = False
            for ny, nx in ((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x)):
                if not (0 <= ny < h and 0 <= nx < w):
                    continue
                m = grid[ny, nx]
                if m < 0:
                    continue
                p = prim[m]
                if p < 0 or p == own or p in seen:
                    continue
                seen.append(p)
                tests += 1
                if hit_m[k, p] and depth_m[k, p] < depth[k]:
                    prim[k] = p
                    depth[k] = depth_m[k, p]
                    own = p
                    updated = True
            cpix += updated
    return cpix, tests


def _fill_geometry(batch: RayBatch, maps: RenderMaps, scene: Scene) -> None:
    for k in np.flatnonzero(maps.prim >= 0):
        prim = scene.primitives[int(maps.prim[k])]
        a = prim.plane_axis
        maps.point[k] = _rpc_scalar(tuple(int(c) for c in batch.origins[k]),
                                    tuple(float(c) for c in batch.directions[k]), a, float(prim.plane))
        n = [0, 0, 0]
        n[a] = -1 if batch.directions[k, a] > 0 else 1
        maps.normal[k] = n


def trace_pass(batch: RayBatch, scene: Scene, cfg: RenderConfig, grid: Optional[np.ndarray] = None,
               pass_id: int = PASS_PRIMARY, reference: Optional[np.ndarray] = None,
               name: str = "primary") -> tuple[RenderMaps, MetricsCounters, list[IterationStats]]:
    """Iterative minimum-depth search for every ray of the batch.

    Each iteration searches below the record's current depth, so depths only
    decrease and a primitive is never returned twice. ``grid`` maps image
    positions to batch indices (-1 where a pixel has no ray in this pass) and is
    needed for neighbour gathering; ``reference`` holds the primitive ids of the
    exhaustive renderer for the per-iteration mismatch statistic.
    """
    n = len(batch)
    maps = RenderMaps.empty(n)
    counters = MetricsCounters(rays=n)
    stats: list[IterationStats] = []
    if n == 0:
        return maps, counters, stats
    hits = batch.intersect(scene)
    maps.tie = _ties(hits, scene.raw_count)
    ctx = _context(hits, scene, cfg)
    iterations = 1 if cfg.mode == "classical" else cfg.iterations
    fn = fn_estimate(cfg.mode, scene.padded_count, cfg.c) if cfg.termination else 0.0
    done = 0
    for it in range(iterations):
        idx = np.flatnonzero(maps.active)
        if idx.size == 0:
            break
        jobs = [(int(k), int(maps.depth[k]) - 1 if maps.depth[k] < DEPTH_MAX else DEPTH_MAX,
                 (int(batch.pixel[k]), pass_id, it)) for k in idx]
        results = _run_queries(ctx, jobs, cfg.workers)
        ev = ci = found = 0
        found_mask = np.zeros(n, bool)
        for k, (p, d, e, c) in zip(idx, results):
            ev += e
            ci += c
            if p >= 0:
                maps.prim[k] = p
                maps.depth[k] = d
                found_mask[k] = True
                found += 1
        cpix = 0
        if cfg.neighbor_opt and cfg.mode != "classical" and grid is not None:
            cpix, tests = neigh_opt(grid, maps, hits)
            ci += tests
        if cfg.mode == "classical":
            maps.active[:] = False
        elif cfg.termination:
            for k in idx:
                if found_mask[k]:
                    maps.sn[k] = 0
                    continue
                maps.sn[k] += 1
                rng = MeasureRng(cfg.seed, int(batch.pixel[k]), pass_id, it, _TERMINATION)
                maps.active[k] = should_continue(int(maps.sn[k]), fn, rng)
        mismatched = int(np.count_nonzero(maps.prim != reference)) if reference is not None else -1
        stats.append(IterationStats(name, it + 1, int(idx.size), found, ev, ci, cpix, mismatched))
        counters = counters + MetricsCounters(c_int=ci, eval=ev, cpix=cpix)
        done = it + 1
    counters = replace(counters, iterations=done)
    _fill_geometry(batch, maps, scene)
    return maps, counters, stats


# -- lighting ---------------------------------------------------------------------

@dataclass
class ShadingPoints:
    """Surface points that receive light: one per non-mirror visible hit."""

    pixel: np.ndarray   # (S,) flat pixel index
    kind: np.ndarray    # (S,) 0 primary, 1 seen in a mirror
    prim: np.ndarray
    point: np.ndarray   # (S, 3)
    normal: np.ndarray  # (S, 3)
    albedo: np.ndarray  # (S, 3)

    def __len__(self) -> int:
        return self.pixel.size


def shading_points(scene: Scene, batches: Sequence[RayBatch], maps: Sequence[RenderMaps]) -> ShadingPoints:
    cols = {k: [] for k in ("pixel", "kind", "prim", "point", "normal", "albedo")}
    for kind, (b, m) in enumerate(zip(batches, maps)):
        for k in np.flatnonzero(m.prim >= 0):
            mat = scene.primitives[int(m.prim[k])].material
            if mat.mirror:
                continue
            cols["pixel"].append(int(b.pixel[k]))
            cols["kind"].append(kind)
            cols["prim"].append(int(m.prim[k]))
            cols["point"].append(m.point[k])
            cols["normal"].append(m.normal[k])
            cols["albedo"].append(mat.albedo)
    s = len(cols["pixel"])
    return ShadingPoints(
        np.asarray(cols["pixel"], np.int64), np.asarray(cols["kind"], np.int64),
        np.asarray(cols["prim"], np.int64),
        np.asarray(cols["point"], np.int64).reshape(s, 3),
        np.asarray(cols["normal"], float).reshape(s, 3),
        np.asarray(cols["albedo"], float).reshape(s, 3))


def _segment_rays(points: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directions and far limits for shadow rays from integer points to float targets."""
    delta = targets - points
    dist = np.linalg.norm(delta, axis=1)
    d = delta / np.where(dist > 0, dist, 1.0)[:, None]
    axis = np.argmax(np.abs(d), axis=1)
    along = np.abs(delta[np.arange(len(d)), axis])
    far = np.maximum(SHADOW_NEAR, np.ceil(along).astype(np.int64) - 1)
    return d, far, dist


def _occlusion(origins: np.ndarray, directions: np.ndarray, far: np.ndarray, streams: list,
               scene: Scene, cfg: RenderConfig, mode: Optional[str] = None,
               chunk: int = 4096) -> tuple[np.ndarray, MetricsCounters]:
    """Sticky visibility over ``direct_iterations`` rounds (one round when exhaustive)."""
    mode = mode or cfg.mode
    n = origins.shape[0]
    occluded = np.zeros(n, bool)
    counters = MetricsCounters(rays=n)
    rounds = 1 if mode == "classical" else cfg.direct_iterations
    near = np.full(n, SHADOW_NEAR, np.int64)
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        hits = intersect_all(origins[s:e], directions[s:e], near[s:e], far[s:e], scene.arrays())
        if mode == "classical":
            occluded[s:e] = hits.hit[:, :scene.raw_count].any(axis=1)
            counters = counters + MetricsCounters(c_int=(e - s) * scene.raw_count)
            continue
        ctx = _context(hits, scene, cfg, mode)
        for it in range(rounds):
            todo = [k for k in range(e - s) if not occluded[s + k]]
            jobs = [(k, DEPTH_MAX, streams[s + k] + (it,)) for k in todo]
            ev = ci = 0
            for k, (p, _d, e_, c_) in zip(todo, _run_queries(ctx, jobs, cfg.workers)):
                ev += e_
                ci += c_
                if p >= 0:
                    occluded[s + k] = True
            counters = counters + MetricsCounters(c_int=ci, eval=ev)
    return occluded, counters


def direct_pass(scene: Scene, pts: ShadingPoints, cfg: RenderConfig) -> tuple[np.ndarray, MetricsCounters]:
    """Irradiance from point and directional lights with shadow-ray visibility.

    Returns (S, 3) radiance already multiplied by albedo. Lights behind the
    surface contribute nothing and cost no ray.
    """
    radiance = np.zeros((len(pts), 3))
    counters = MetricsCounters()
    if len(pts) == 0:
        return radiance, counters
    origins, dirs, fars, weights, owners, streams = [], [], [], [], [], []
    p_float = pts.point.astype(float)
    for li, light in enumerate(scene.lights):
        if isinstance(light, PointLight):
            target = np.broadcast_to(np.asarray(light.position, float), p_float.shape)
            d, far, _ = _segment_rays(pts.point, target)
        elif isinstance(light, DirectionalLight):
            toward = -np.asarray(light.direction, float)
            toward /= np.linalg.norm(toward)
            d = np.broadcast_to(toward, p_float.shape).copy()
            far = np.full(len(pts), 2 * scene.world_size, np.int64)
        else:
            continue
        cos = np.einsum("ij,ij->i", pts.normal, d)
        lit = np.flatnonzero(cos > 0)
        origins.append(pts.point[lit])
        dirs.append(d[lit])
        fars.append(far[lit])
        weights.append(cos[lit, None] * np.asarray(light.intensity, float)[None, :])
        owners.append(lit)
        streams.extend((int(pts.pixel[k]), PASS_DIRECT, int(pts.kind[k]), li) for k in lit)
    if not origins:
        return radiance, counters
    origins = np.concatenate(origins)
    occluded, counters = _occlusion(origins, np.concatenate(dirs), np.concatenate(fars),
                                    streams, scene, cfg)
    owners = np.concatenate(owners)
    weights = np.concatenate(weights)
    visible = ~occluded
    np.add.at(radiance, owners[visible], weights[visible])
    return radiance * pts.albedo, counters


def _rect_sample(light: RectLight, rng: MeasureRng) -> np.ndarray:
    lo = np.asarray(light.bounds_min, float)
    hi = np.asarray(light.bounds_max, float)
    u = np.array([rng.random(), rng.random(), rng.random()])
    return lo + u * (hi - lo)  # flat axis has lo == hi


def _rect_area(light: RectLight) -> float:
    a = light.plane_axis
    u, v = [b for b in range(3) if b != a]
    return float((light.bounds_max[u] - light.bounds_min[u]) * (light.bounds_max[v] - light.bounds_min[v]))


def area_light_pass(scene: Scene, pts: ShadingPoints, light: RectLight, samples: int,
                    cfg: RenderConfig, light_index: int = 0,
                    mode: Optional[str] = None) -> tuple[np.ndarray, MetricsCounters]:
    """Monte Carlo estimate of the light's contribution with ``samples`` shadow rays per point.

    Sample positions depend only on (seed, pixel, sample), never on the
    visibility back end, so estimators at different settings stay comparable.
    """
    radiance = np.zeros((len(pts), 3))
    if len(pts) == 0:
        return radiance, MetricsCounters()
    targets = np.empty((len(pts) * samples, 3))
    for k in range(len(pts)):
        rng = MeasureRng(cfg.seed, _AREA_POSITIONS, light_index, int(pts.pixel[k]), int(pts.kind[k]))
        for s in range(samples):
            targets[k * samples + s] = _rect_sample(light, rng)
    origins = np.repeat(pts.point, samples, axis=0)
    d, far, dist = _segment_rays(origins, targets)
    normals = np.repeat(pts.normal, samples, axis=0)
    cos_x = np.einsum("ij,ij->i", normals, d)
    cos_l = np.abs(d[:, light.plane_axis])
    use = np.flatnonzero((cos_x > 0) & (dist > 0))
    streams = [(int(pts.pixel[j // samples]), PASS_AREA, int(pts.kind[j // samples]), light_index,
                int(j % samples)) for j in use]
    occluded, counters = _occlusion(origins[use], d[use], far[use], streams, scene, cfg, mode)
    g = cos_x[use] * cos_l[use] * _rect_area(light) / (math.pi * np.maximum(dist[use] ** 2, 1.0))
    g = np.where(occluded, 0.0, g)
    contrib = np.zeros(len(pts))
    np.add.at(contrib, use // samples, g)
    radiance = contrib[:, None] * np.asarray(light.intensity, float)[None, :] / samples
    return radiance * pts.albedo, counters


def _sphere_direction(rng: MeasureRng) -> np.ndarray:
    z = 2.0 * rng.random() - 1.0
    phi = 2.0 * math.pi * rng.random()
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([s * math.cos(phi), s * math.sin(phi), z])


def vpl_pass(scene: Scene, pts: ShadingPoints, vpls: int, cfg: RenderConfig,
             mode: Optional[str] = None) -> tuple[np.ndarray, MetricsCounters]:
    """Single-bounce indirect light from per-point virtual point lights.

    Light paths are generated and traced exhaustively; only the VPL-to-point
    visibility uses the configured back end.
    """
    radiance = np.zeros((len(pts), 3))
    sources = [l for l in scene.lights if isinstance(l, (PointLight, RectLight))]
    if len(pts) == 0 or vpls == 0 or not sources:
        return radiance, MetricsCounters()
    m = len(pts) * vpls
    gen_o = np.empty((m, 3), np.int64)
    gen_d = np.empty((m, 3))
    power = np.empty((m, 3))
    world_mid = scene.world_size / 2.0
    for k in range(len(pts)):
        rng = MeasureRng(cfg.seed, _VPL_PATHS, int(pts.pixel[k]), int(pts.kind[k]))
        for v in range(vpls):
            j = k * vpls + v
            light = sources[rng.below(len(sources))]
            d = _sphere_direction(rng)
            if isinstance(light, PointLight):
                origin = np.floor(np.asarray(light.position, float))
            else:
                origin = np.floor(_rect_sample(light, rng))
                a = light.plane_axis
                d[a] = math.copysign(abs(d[a]), world_mid - origin[a])
            gen_o[j] = origin
            gen_d[j] = d
            power[j] = np.asarray(light.intensity, float) * len(sources)
    gen_hits = intersect_all(gen_o, gen_d, np.full(m, SHADOW_NEAR), np.full(m, DEPTH_MAX), scene.arrays())
    raw = scene.raw_count
    dd = np.where(gen_hits.hit[:, :raw], gen_hits.depth[:, :raw], DEPTH_MAX)
    first = np.argmin(dd, axis=1) if raw else np.zeros(m, np.int64)
    placed = (dd[np.arange(m), first] < DEPTH_MAX) if raw else np.zeros(m, bool)
    counters = MetricsCounters(rays=m, c_int=m * raw)
    vpl_pos = np.zeros((m, 3), np.int64)
    vpl_n = np.zeros((m, 3))
    for j in np.flatnonzero(placed):
        prim = scene.primitives[int(first[j])]
        if prim.material.mirror:
            placed[j] = False
            continue
        a = prim.plane_axis
        vpl_pos[j] = _rpc_scalar(tuple(int(c) for c in gen_o[j]), tuple(float(c) for c in gen_d[j]),
                                 a, float(prim.plane))
        vpl_n[j, a] = -1.0 if gen_d[j, a] > 0 else 1.0
        power[j] *= np.asarray(prim.material.albedo, float)
    origins = np.repeat(pts.point, vpls, axis=0)
    d, far, dist = _segment_rays(origins, vpl_pos.astype(float))
    normals = np.repeat(pts.normal, vpls, axis=0)
    cos_x = np.einsum("ij,ij->i", normals, d)
    cos_y = -np.einsum("ij,ij->i", vpl_n, d)
    use = np.flatnonzero(placed & (cos_x > 0) & (cos_y > 0) & (dist > 0))
    streams = [(int(pts.pixel[j // vpls]), PASS_VPL, int(pts.kind[j // vpls]), int(j % vpls)) for j in use]
    occluded, vis_counters = _occlusion(origins[use], d[use], far[use], streams, scene, cfg, mode)
    counters = counters + vis_counters
    g = INDIRECT_GAIN * cos_x[use] * cos_y[use] / np.maximum(dist[use] ** 2, VPL_CLAMP ** 2)
    g = np.where(occluded, 0.0, g)
    np.add.at(radiance, use // vpls, g[:, None] * power[use])
    return radiance * pts.albedo / vpls, counters


# -- full render ------------------------------------------------------------------

@dataclass
class RenderResult:
    image: np.ndarray         # (H, W, 3) uint8
    radiance: np.ndarray      # (H, W, 3) float before clamping
    counters: MetricsCounters
    iteration_stats: list[IterationStats]
    primary: RenderMaps
    specular: RenderMaps
    tie_mask: np.ndarray      # (H, W) pixels whose visible primitive is not unique
    resolution: tuple[int, int]


def to_8bit(radiance: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(radiance, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def validate_scene(scene: Scene) -> None:
    if scene.camera is None:
        raise ConfigurationError(f"scene {scene.name!r} has no camera")
    if scene.pb > 20:
        raise ConfigurationError("scene has too many primitives for the index register")


def render_scene(scene: Scene, cfg: RenderConfig,
                 reference: Optional[RenderResult] = None) -> RenderResult:
    """Primary pass, one mirror bounce, lighting, Whitted-style shading.

    Mirrors are purely specular: a mirror pixel shows ``reflectance`` times the
    radiance of the surface it reflects. Background is black.
    """
    validate_scene(scene)
    w, h = cfg.resolution or scene.camera.resolution
    primary = primary_rays(scene.camera, (w, h))
    grid = np.arange(w * h).reshape(h, w)
    ref_primary = reference.primary.prim if reference is not None else None
    p_maps, counters, stats = trace_pass(primary, scene, cfg, grid, PASS_PRIMARY, ref_primary, "primary")

    bounce = reflected_rays(primary, p_maps, scene)
    bounce_grid = np.full(w * h, -1, np.int64)
    bounce_grid[bounce.pixel] = np.arange(len(bounce))
    ref_bounce = None
    if reference is not None and len(bounce):
        lookup = np.full(w * h, -1, np.int64)
        ref_b = reflected_rays(primary, reference.primary, scene)
        lookup[ref_b.pixel] = reference.specular.prim
        ref_bounce = lookup[bounce.pixel]
    s_maps, s_counters, s_stats = trace_pass(bounce, scene, cfg, bounce_grid.reshape(h, w),
                                             PASS_SPECULAR, ref_bounce, "specular")
    counters = counters + s_counters
    stats += s_stats

    pts = shading_points(scene, (primary, bounce), (p_maps, s_maps))
    radiance_pts, c = direct_pass(scene, pts, cfg)
    counters = counters + c
    for li, light in enumerate(scene.lights):
        if isinstance(light, RectLight):
            r, c = area_light_pass(scene, pts, light, cfg.light_samples, cfg, li)
            radiance_pts += r
            counters = counters + c
    if cfg.vpl_count:
        r, c = vpl_pass(scene, pts, cfg.vpl_count, cfg)
        radiance_pts += r
        counters = counters + c
    for k in range(len(pts)):
        emissive = scene.primitives[int(pts.prim[k])].material.emissive
        if emissive is not None:
            radiance_pts[k] += emissive

    primary_rad = np.zeros((w * h, 3))
    mirror_rad = np.zeros((w * h, 3))
    first = pts.kind == 0
    primary_rad[pts.pixel[first]] = radiance_pts[first]
    mirror_rad[pts.pixel[~first]] = radiance_pts[~first]
    is_mirror = np.zeros(w * h, bool)
    is_mirror[bounce.pixel] = True
    radiance = np.where(is_mirror[:, None], cfg.reflectance * mirror_rad, primary_rad)

    tie = p_maps.tie.copy()
    tie[bounce.pixel] |= s_maps.tie
    radiance = radiance.reshape(h, w, 3)
    return RenderResult(to_8bit(radiance), radiance, counters, stats, p_maps, s_maps,
                        tie.reshape(h, w), (w, h))
