from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

from trap_prisma.configs.LossConfig import LossConfig
from trap_prisma.lattice.grid import GridSpec

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    """
    Everything a CLI run needs. Built from a JSON document with `from_dict`; every
    field, defaults included, is written back into the run's summary.
    """

    schema_version: int = SCHEMA_VERSION

    # Geometry
    width: int = 32
    height: int = 64
    target_width: int = 32
    target_height: int = 32

    # Loss model and protocol
    loss: LossConfig = field(default_factory=LossConfig)
    planner: str = "redrec"
    sampling: str = "corruption"     # or "immediate"
    threshold: Optional[int] = None  # minimum initial atom count, None disables rejection

    # Monte Carlo
    trials: int = 1000
    seed: int = 0
    jobs: int = 1
    survival_scan: List[float] = field(default_factory=list)
    trace_trials: int = 0

    # Sweeps (baseline surface and success sweeps)
    sweep_geometry: str = "chain"    # or "square"
    sweep_targets: List[int] = field(default_factory=lambda: [8, 16, 24, 32, 40, 48])
    sweep_traps: List[int] = field(default_factory=lambda: list(range(8, 129, 8)))
    certain_p_min: float = 0.98

    # Benchmark
    benchmark_sides: List[int] = field(default_factory=lambda: [8, 16, 32])
    benchmark_eta: float = 2.0
    benchmark_samples: int = 200

    # Thresholding
    threshold_min: Optional[int] = None
    threshold_max: Optional[int] = None
    threshold_step: int = 1

    # Replay
    trace_path: Optional[str] = None

    # Output
    out: str = "results"

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"Unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}"
            )
        if isinstance(self.loss, dict):
            self.loss = LossConfig.from_dict(self.loss)
        # Raises on an invalid geometry.
        self.grid()

        from trap_prisma.solvers.planner_dictionary import planner_dict, sampling_modes

        if self.planner not in planner_dict:
            raise ValueError(
                f"Unknown planner '{self.planner}'. Choose from {sorted(planner_dict)}"
            )
        if self.sampling not in sampling_modes:
            raise ValueError(f"Unknown sampling mode '{self.sampling}'. Choose from {list(sampling_modes)}")
        if self.sweep_geometry not in ("chain", "square"):
            raise ValueError(f"sweep_geometry must be 'chain' or 'square'. Got '{self.sweep_geometry}'")
        for name in ("trials", "jobs", "benchmark_samples", "threshold_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1. Got {getattr(self, name)}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative. Got {self.seed}")
        if self.trace_trials < 0:
            raise ValueError(f"trace_trials must be non-negative. Got {self.trace_trials}")
        if self.benchmark_eta < 1:
            raise ValueError(f"benchmark_eta must be at least 1. Got {self.benchmark_eta}")
        if not 0.0 < self.certain_p_min <= 1.0:
            raise ValueError(f"certain_p_min must lie in (0, 1]. Got {self.certain_p_min}")
        for p in self.survival_scan:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"survival_scan values must lie in [0, 1]. Got {p}")

        n_traps = self.grid().n_traps
        for name in ("threshold_min", "threshold_max"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= n_traps:
                raise ValueError(f"{name} must lie in [0, {n_traps}]. Got {value}")
        if (
            self.threshold_min is not None
            and self.threshold_max is not None
            and self.threshold_min > self.threshold_max
        ):
            raise ValueError(
                f"threshold_min {self.threshold_min} exceeds threshold_max {self.threshold_max}"
            )

        from trap_prisma.simulation.protocol import check_threshold

        check_threshold(self.grid(), self.loss, self.threshold)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(config_dict) - known)
        if unknown:
            raise ValueError(f"Unknown configuration keys: {', '.join(unknown)}")
        values = dict(config_dict)
        if "loss" in values:
            values["loss"] = LossConfig.from_dict(values["loss"])
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["loss"] = self.loss.to_dict()
        values["survival_scan"] = list(self.survival_scan)
        return values

    def grid(self) -> GridSpec:
        return GridSpec(self.width, self.height, self.target_width, self.target_height)

    def pretty_print(self):
        print("Configuration:")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, LossConfig):
                print(f"  {f.name}:")
                for key, item in value.to_dict().items():
                    print(f"    {key}: {item}")
                continue
            print(f"  {f.name}: {value}")
