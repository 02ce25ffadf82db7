"""Integrated storage assignment for pick-and-pass warehouses.

Selects which SKUs go into a forward picking area, places them on shelves
across the stations of a conveyor loop, and keeps station workloads balanced
on average or on every weekday.
"""

from pickloop.core import DAYS, Instance, Sku, Solution, ValidationError, Violation
from pickloop.evaluate import audit_assignment, evaluate, objective_parts
from pickloop.layout import Layout, Shelf, build_default_layout, scale_layout
from pickloop.model import (MilpModel, SolveParams, build_assignment_stage, build_integrated,
                            build_robust, build_selection_stage, model_stats)

__all__ = [
    "DAYS", "Instance", "Layout", "MilpModel", "Shelf", "Sku", "Solution", "SolveParams",
    "ValidationError", "Violation", "audit_assignment", "build_assignment_stage",
    "build_default_layout", "build_integrated", "build_robust", "build_selection_stage",
    "evaluate", "model_stats", "objective_parts", "scale_layout",
]
