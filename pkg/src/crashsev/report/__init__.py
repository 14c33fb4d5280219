"""SVG charts, run configuration and the resumable end-to-end pipeline."""

from .config import RunConfig, resolve_workers
from .pipeline import PipelineError, PipelineResult, run_pipeline
from .svg import ChartSpec, render_chart, write_chart

__all__ = [
    "ChartSpec",
    "PipelineError",
    "PipelineResult",
    "RunConfig",
    "render_chart",
    "resolve_workers",
    "run_pipeline",
    "write_chart",
]
