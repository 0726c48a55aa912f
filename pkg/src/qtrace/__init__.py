"""Simulated quantum ray tracing on quantized axis-aligned scenes."""
from .geometry import Ray, Scene, ScenePrimitive, classical_intersect, build_oracle
from .metrics import MetricsCounters, dpix, nrmse
from .qcore import ConfigurationError, MeasureRng, OracleSpec
from .render import RenderConfig, qtrace, render_scene
from .scenes import depth_complexity, load_scene, qornell
from .search import QSearchConfig, fn_prob_exact, fn_prob_qs, fn_prob_rc, qsearch

__all__ = [
    "ConfigurationError", "MeasureRng", "MetricsCounters", "OracleSpec", "QSearchConfig", "Ray",
    "RenderConfig", "Scene", "ScenePrimitive", "build_oracle", "classical_intersect",
    "depth_complexity", "dpix", "fn_prob_exact", "fn_prob_qs", "fn_prob_rc", "load_scene",
    "nrmse", "qornell", "qsearch", "qtrace", "render_scene",
]
