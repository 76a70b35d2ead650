"""Execution-grounded multi-agent pipeline for verified code patches."""

__version__ = "0.1.0"
