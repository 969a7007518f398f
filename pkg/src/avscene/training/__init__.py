from .augment import (CropIndex, N_OFFSETS, center_crop, draw_crop, mixup_batch,
                      one_hot, random_crop_1s)
from .config import STAGES, TrainConfig
from .features import FrameFeatureCache
from .history import CSV_HEADER, EpochRecord, TrainHistory
from .loop import FrozenWeightViolation, StageResult, run_stage
from .schedule import EarlyStopper, PlateauScheduler, simulate_schedule
from .serialize import (backbone_from_spec, load_any_model, load_audio_model,
                        load_av_model, load_visual_model, save_audio_model,
                        save_av_model, save_visual_model)

__all__ = [
    "TrainConfig", "STAGES",
    "CropIndex", "N_OFFSETS", "draw_crop", "center_crop", "random_crop_1s",
    "mixup_batch", "one_hot",
    "PlateauScheduler", "EarlyStopper", "simulate_schedule",
    "TrainHistory", "EpochRecord", "CSV_HEADER",
    "FrameFeatureCache",
    "run_stage", "StageResult", "FrozenWeightViolation",
    "load_any_model", "load_audio_model", "load_visual_model", "load_av_model",
    "save_audio_model", "save_visual_model", "save_av_model",
    "backbone_from_spec",
]
