from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InfeasibleCIError(RuntimeError):
    """The CI constraints cannot be met at the constant-modulus power level."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SolverReport:
    """Outcome of one per-symbol-vector solve.

    ``objective`` is the quartic beampattern cost at ``x``; ``alpha`` is the
    optimal pattern scale for ``x``.  ``flags`` collects non-fatal
    conditions (iteration caps, residual constraint violation, ...).
    """

    solver: str
    x: np.ndarray
    alpha: float
    objective: float
    max_violation: float
    outer_iterations: int
    inner_iterations: int
    seconds: float
    objective_trace: list = field(default_factory=list)
    violation_trace: list = field(default_factory=list)
    inner_traces: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def flagged(self):
        return any(bool(v) for v in self.flags.values())
