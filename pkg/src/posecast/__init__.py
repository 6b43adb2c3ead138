"""posecast: multi-future human pose forecasting and pose-conditioned video synthesis."""

__version__ = "0.1.0"
