"""Agentic hybrid-retrieval question answering for structured document corpora."""

__version__ = "0.1.0"
