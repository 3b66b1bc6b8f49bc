"""Heart-rate estimation from ballistocardiogram (BCG) recordings."""
from __future__ import annotations

__version__ = "0.1.0"

from .detect import METHODS, DetectorConfig, detect_window
from .signal_core import TimeSeries, WindowLabel, WindowPlan

__all__ = ["METHODS", "DetectorConfig", "TimeSeries", "WindowLabel", "WindowPlan", "detect_window", "__version__"]
