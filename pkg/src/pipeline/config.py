"""End-to-end pipeline configuration."""

from dataclasses import asdict, dataclass, field
from typing import Tuple

from ..evaluation import EvalConfig
from ..network import DEFAULT_LAYER_SIZES, DEFAULT_SEGMENT_SIZE, TrainConfig
from ..preprocessing import DEFAULT_NUM_SEGMENTS, DEFAULT_WINDOW_LEN
from ..svr import SVRHyper
from ..utils.errors import ConfigError

COMBINERS = ("svr", "none")


@dataclass
class PipelineConfig:
    """Windowing, splits, architecture and nested stage settings.

    `rng_seed` is the root of every random stream in a run; the LSTM's
    own `train.rng_seed` is replaced by a subseed derived from it.
    """

    window_len: int = DEFAULT_WINDOW_LEN
    num_segments: int = DEFAULT_NUM_SEGMENTS
    train_fraction: float = 0.8
    val_fraction: float = 0.1
    test_fraction: float = 0.1
    trials: int = 10
    layer_sizes: Tuple[int, ...] = DEFAULT_LAYER_SIZES
    dropout_rate: float = 0.2
    imv_segment_size: int = DEFAULT_SEGMENT_SIZE
    combiner: str = "svr"
    svr_grid_search: bool = True
    rng_seed: int = 42
    jobs: int = 1
    eval: EvalConfig = field(default_factory=EvalConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    svr: SVRHyper = field(default_factory=SVRHyper)

    def __post_init__(self):
        self.layer_sizes = tuple(int(h) for h in self.layer_sizes)
        if self.window_len < 1:
            raise ConfigError("window_len must be positive", "window_len")
        if self.num_segments < 1:
            raise ConfigError("num_segments must be positive", "num_segments")
        fractions = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fractions):
            raise ConfigError("split fractions must be positive", "train_fraction")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1", "train_fraction")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1", "trials")
        if not self.layer_sizes or any(h < 1 for h in self.layer_sizes):
            raise ConfigError("layer_sizes must be positive", "layer_sizes")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)", "dropout_rate")
        if self.imv_segment_size < 1:
            raise ConfigError(
                "imv_segment_size must be positive", "imv_segment_size"
            )
        if self.combiner not in COMBINERS:
            raise ConfigError(
                f"combiner must be one of {', '.join(COMBINERS)}", "combiner"
            )
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1", "jobs")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["layer_sizes"] = list(self.layer_sizes)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        return cls(
            eval=EvalConfig(**data.pop("eval", {})),
            train=TrainConfig(**data.pop("train", {})),
            svr=SVRHyper(**data.pop("svr", {})),
            **data,
        )
