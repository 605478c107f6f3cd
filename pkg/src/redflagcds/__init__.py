"""Orchestrator-specialist multi-agent engine for secondary-headache red-flag screening."""

from .domain import (
    AgentVerdict,
    CaseResult,
    Decision,
    GraphState,
    RedFlag,
    RoutingDecision,
    Stage,
    TraceEvent,
    Vignette,
    parse_red_flag,
)
from .engine import Architecture, FanoutMode, RunConfig, run_case
from .evaluation import CaseMetrics, GoldCase, case_metrics, load_dataset, macro_average

__all__ = [
    "AgentVerdict",
    "Architecture",
    "CaseMetrics",
    "CaseResult",
    "Decision",
    "FanoutMode",
    "GoldCase",
    "GraphState",
    "RedFlag",
    "RoutingDecision",
    "RunConfig",
    "Stage",
    "TraceEvent",
    "Vignette",
    "case_metrics",
    "load_dataset",
    "macro_average",
    "parse_red_flag",
    "run_case",
]
