"""Experiment and session plumbing: CLI, sweeps, persistence, HTTP service."""

from .sessions import Session, SessionRecord
from .store import EventLog
from .sweep import ExperimentSpec, experiment_sweep

__all__ = ["Session", "SessionRecord", "EventLog", "ExperimentSpec", "experiment_sweep"]
