"""Discrete-event simulation of filling distributed-training GPU bubbles with inference work."""

from .model import (
    GpuSpec, InferenceRequest, InstanceKind, InstanceSpec, KernelOp, Mode, RequestClass,
    RequestProfile, SchedulerParams, Segment, SimReport, Status, TrainingTrace, bubble_fraction,
    token_size_of,
)
from .scenario import Scenario, load_scenario, parse_scenario
from .sim import simulate

__all__ = [
    "GpuSpec", "InferenceRequest", "InstanceKind", "InstanceSpec", "KernelOp", "Mode",
    "RequestClass", "RequestProfile", "SchedulerParams", "Segment", "SimReport", "Status",
    "TrainingTrace", "bubble_fraction", "token_size_of", "Scenario", "load_scenario",
    "parse_scenario", "simulate",
]
