"""Weekly pork reference-price forecasting: ingestion, market selection,
lag-aware supervised datasets, from-scratch model families, evaluation,
and an event-sourced forecasting service."""

__version__ = "0.1.0"

__all__ = ["__version__"]
