"""Crash-severity analytics: ingest, features, classifiers, metrics and reports."""

__version__ = "0.1.0"
