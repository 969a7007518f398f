"""Stage training configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

STAGES = ("audio", "visual", "fusion", "finetune")


@dataclass
class TrainConfig:
    stage: str = "audio"
    max_epochs: int = 200
    batch_size: int = 32
    lr_init: float = 1e-3
    plateau_factor: float = 0.5
    plateau_patience: int = 20
    early_stop_patience: int = 50
    mixup_alpha: float = 0.4
    mixup: bool = True
    seed: int = 0
    filterbank: str = "gammatone"
    backbone: str = "tiny"          # "tiny" or "vgg16:<checkpoint path>"
    backbone_seed: int = 0
    val_full_clips: bool = False     # per-epoch metric on 1 s center crops by default
    record_walltime: bool = True     # off -> seconds column fixed at 0 (bitwise CSV)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}, got {self.stage!r}")
        if self.plateau_patience <= 0 or self.early_stop_patience <= 0:
            raise ValueError("patience values must be positive")
        if self.lr_init <= 0:
            raise ValueError("lr_init must be positive")
        if self.mixup_alpha <= 0:
            raise ValueError("mixup_alpha must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @staticmethod
    def for_stage(stage: str, **overrides) -> "TrainConfig":
        """Stage defaults: batch 32 for the subnetworks, 16 for fusion and
        finetune; finetune starts at 1e-5 with a 5-epoch budget."""
        defaults: dict = {"stage": stage}
        if stage in ("fusion", "finetune"):
            defaults["batch_size"] = 16
        if stage == "finetune":
            defaults["lr_init"] = 1e-5
            defaults["max_epochs"] = 5
        defaults.update(overrides)
        return TrainConfig(**defaults)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(**d)

    @staticmethod
    def from_json(path: str | Path) -> "TrainConfig":
        return TrainConfig.from_dict(json.loads(Path(path).read_text()))
