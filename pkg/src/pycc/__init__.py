"""Desk-scale method-completion pipeline: ingest, train, evaluate, serve."""

__version__ = "0.1.0"
