"""Feature schema for one coating epoch: 27 named features and the
per-target-group applicability masks.

Groups: PIP (particle in-flight), PPP (process performance), CQP (coating
quality). Environmental averages feed only CQP; component thermal features
feed PPP and CQP; the gas-flow/pressure block feeds all three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .semkl import TargetGroup

FEATURE_NAMES: tuple[str, ...] = (
    "env_air_pressure_avg",      # 1
    "env_humidity_avg",          # 2
    "env_temperature_avg",       # 3
    "stand_off_distance",        # 4
    "coating_velocity",          # 5
    "powder_feed_rate",          # 6
    "cooling_temperature_avg",   # 7
    "cooling_flow_avg",          # 8
    "fuel_flow_avg",             # 9
    "oxygen_flow_avg",           # 10
    "shroud_flow_avg",           # 11
    "fuel_inlet_pressure_avg",   # 12
    "fuel_outlet_pressure_avg",  # 13
    "oxygen_inlet_pressure_avg",   # 14
    "oxygen_outlet_pressure_avg",  # 15
    "shroud_inlet_pressure_avg",   # 16
    "shroud_outlet_pressure_avg",  # 17
    "propane_temperature_avg",   # 18
    "airjet_flow_avg",           # 19
    "fuel_oxygen_ratio",         # 20
    "max_component_temperature",  # 21
    "heat_up_rate",              # 22
    "cool_down_rate",            # 23
    "starting_temperature",      # 24
    "fuel_flow_std",             # 25
    "oxygen_flow_std",           # 26
    "shroud_flow_std",           # 27
)

N_FEATURES = len(FEATURE_NAMES)

# 1-based feature numbers per group
_PIP_NUMBERS = (4, 6, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20)
_PPP_NUMBERS = tuple(k for k in range(1, 28) if k not in (1, 2, 3))
_CQP_NUMBERS = tuple(range(1, 28))

GROUP_FEATURE_INDICES: dict[TargetGroup, tuple[int, ...]] = {
    TargetGroup.PIP: tuple(k - 1 for k in _PIP_NUMBERS),
    TargetGroup.PPP: tuple(k - 1 for k in _PPP_NUMBERS),
    TargetGroup.CQP: tuple(k - 1 for k in _CQP_NUMBERS),
}


@dataclass(frozen=True)
class FeatureVector:
    """One epoch's 27 extracted features in schema order."""

    values: np.ndarray
    epoch_id: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got {v.shape}")

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}

    def for_group(self, group: TargetGroup) -> np.ndarray:
        """Feature subset applicable to one target group, in schema order."""
        idx = np.array(GROUP_FEATURE_INDICES[group], dtype=int)
        return np.asarray(self.values, dtype=float)[idx]


def group_feature_names(group: TargetGroup) -> tuple[str, ...]:
    return tuple(FEATURE_NAMES[i] for i in GROUP_FEATURE_INDICES[group])
