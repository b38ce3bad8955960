"""Per-trial outcome record shared by all protocols."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrialRecord:
    protocol: str
    true_hypothesis: int
    decision: int
    N: int
    comms: np.ndarray                    # total messages per sensor
    trigger_times: np.ndarray | None = None
    N_c: int | None = None               # Phase-1 rounds (cct only)
    comms_by_type: dict[str, np.ndarray] | None = None
    seed: tuple | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("a trial lasts at least one round")

    @property
    def correct(self) -> bool:
        return self.decision == self.true_hypothesis

    @property
    def mean_comms(self) -> float:
        return float(np.mean(self.comms))
