"""Pydantic request/response models for the service surface."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class SyntheticRequest(BaseModel):
    out_dir: str
    examples_per_class: int = Field(20, ge=1)
    seed: int = 0
    self_test: bool = False


class SyntheticResponse(BaseModel):
    manifest: str
    n_examples: int
    n_train: int
    n_val: int
    self_test: Optional[dict] = None


class FeatureRequest(BaseModel):
    wav: str
    out: str
    filterbank: str = Field("gammatone", pattern="^(mel|gammatone)$")


class FeatureResponse(BaseModel):
    array_file: str
    sidecar_file: str
    shape: list[int]
    filterbank: str


class TrainRequest(BaseModel):
    stage: str = Field(pattern="^(audio|visual|fusion|finetune)$")
    manifest: str
    out_dir: str
    config: Optional[dict] = None
    audio_checkpoint: Optional[str] = None
    visual_checkpoint: Optional[str] = None
    fusion_checkpoint: Optional[str] = None
    cache_dir: Optional[str] = None


class TrainResponse(BaseModel):
    checkpoint: str
    history_csv: str
    history_json: str
    epochs_run: int
    best_epoch: int
    best_val_acc: float
    stop_reason: str


class EvaluateRequest(BaseModel):
    checkpoint: str
    manifest: str
    split: str = Field("val", pattern="^(train|val)$")
    out_dir: Optional[str] = None
    formats: list[str] = Field(default_factory=lambda: ["json"])
    cache_dir: Optional[str] = None


class EvaluateResponse(BaseModel):
    report: dict
    files: list[str]


class PredictRequest(BaseModel):
    checkpoint: str
    audio: str
    frames_dir: Optional[str] = None


class PredictResponse(BaseModel):
    heads: dict[str, list[float]]
    argmax: dict[str, str]


class ParamsRequest(BaseModel):
    backbone: str = "tiny"
    backbone_seed: int = 0
    checkpoint: Optional[str] = None


class ParamsResponse(BaseModel):
    rows: list[dict]
    table: str


class GradcheckRequest(BaseModel):
    seeds: int = Field(10, ge=1, le=100)
    cases: Optional[list[str]] = None


class GradcheckCaseResult(BaseModel):
    name: str
    max_error: float
    h: float
    seeds: int
    seconds: float
    passed: bool


class GradcheckResponse(BaseModel):
    results: list[GradcheckCaseResult]
    passed: bool
    tolerance: float
