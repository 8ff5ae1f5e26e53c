"""IRS-assisted downlink in a blocked factory: scene, channels, closed forms and Monte Carlo."""

from .analytic import AnalyticInputs, analytic_inputs, expected_snr_void, fb_capacity_bound
from .blockage import BlockageField, BlockageModel
from .channel import RadioConfig
from .engine import MetricsReport, PointMetrics, ScenarioConfig, compare_analytic, run_grid
from .geometry import FactoryLayout, IrsDeployment, LinkGeometry

__all__ = [
    "AnalyticInputs", "BlockageField", "BlockageModel", "FactoryLayout", "IrsDeployment",
    "LinkGeometry", "MetricsReport", "PointMetrics", "RadioConfig", "ScenarioConfig",
    "analytic_inputs", "compare_analytic", "expected_snr_void", "fb_capacity_bound", "run_grid",
]
