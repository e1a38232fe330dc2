"""Agentic media monitoring: pipeline, semantic index, alerts, chat agent."""

__version__ = "0.1.0"
