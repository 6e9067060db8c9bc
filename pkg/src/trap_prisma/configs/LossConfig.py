from dataclasses import asdict, dataclass, fields, replace
import math
from typing import Any, Dict


@dataclass(frozen=True)
class LossConfig:
    """
    Loading and loss model. Survival probabilities are per addressed atom and batch;
    idle atoms survive a batch of duration t with probability exp(-t / tau).
    Times are in seconds.
    """

    epsilon: float = 0.6       # loading efficiency
    p_alpha: float = 0.985     # transfer survival
    p_nu: float = 0.985        # displacement survival
    tau: float = 60.0          # trap lifetime
    t_alpha: float = 15e-6
    t_nu: float = 67e-6
    t_mot: float = 0.1
    t_image: float = 0.02

    def __post_init__(self):
        for name in ("epsilon", "p_alpha", "p_nu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]. Got {value}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive. Got {self.tau}")
        for name in ("t_alpha", "t_nu", "t_mot", "t_image"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative. Got {value}")

    @classmethod
    def lossless(cls, epsilon: float = 0.6, **times) -> "LossConfig":
        return cls(epsilon=epsilon, p_alpha=1.0, p_nu=1.0, tau=math.inf, **times)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "LossConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(config_dict) - known)
        if unknown:
            raise ValueError(f"Unknown loss parameters: {', '.join(unknown)}")
        values = dict(config_dict)
        # JSON has no infinity; a null lifetime means no idle loss.
        if "tau" in values and values["tau"] is None:
            values["tau"] = math.inf
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        if math.isinf(self.tau):
            values["tau"] = None
        return values

    @property
    def is_lossless(self) -> bool:
        return self.p_alpha == 1.0 and self.p_nu == 1.0 and math.isinf(self.tau)

    def idle_survival(self, duration: float) -> float:
        if math.isinf(self.tau):
            return 1.0
        return math.exp(-duration / self.tau)

    def with_survival(self, p: float) -> "LossConfig":
        """Same model with p_alpha = p_nu = p."""
        return replace(self, p_alpha=p, p_nu=p)


LossParams = LossConfig
