"""Service-layer operations.

The FastAPI endpoints and the CLI subcommands both call these functions;
they translate domain errors into :class:`DataError` (bad inputs on disk)
versus :class:`UsageError` (bad arguments) so both surfaces can map them
consistently (HTTP 400/422, exit codes 3/2).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..data.loader import ExampleError, load_frame_pixels, read_audio_10s
from ..data.manifest import CLASSES, ManifestError, load_manifest
from ..data.synthetic import SyntheticSpec, generate_synthetic, separability_self_test
from ..engine.checkpoint import CheckpointError
from ..evaluation.budget import budget_rows, budget_rows_from_checkpoint, format_budget
from ..evaluation.metrics import (MissingHeadError, evaluate_checkpoint,
                                  predict_audio_clip, predict_visual_features)
from ..evaluation.report import render_csv, render_json, render_text
from ..frontend.rep import make_rep, save_rep
from ..frontend.resample import resample_48k_to_44k1
from ..frontend.wavio import AudioFileError, read_wav
from ..gradsuite import TOLERANCE, run_suite
from ..models.visual_net import normalize_frames
from ..training.config import TrainConfig
from ..training.features import FrameFeatureCache
from ..training.loop import run_stage
from ..training.serialize import load_any_model
from . import schemas as S


class UsageError(ValueError):
    """Bad arguments: caller mistake, not data on disk."""


class DataError(RuntimeError):
    """Input files are missing, malformed, or inconsistent."""


_MODEL_REGISTRY: dict[tuple[str, float], tuple] = {}


def _load_model_cached(path: str):
    """Checkpoint registry keyed by (path, mtime): repeated /predict calls
    against the same file skip the reload."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"checkpoint not found: {p}")
    key = (str(p.resolve()), p.stat().st_mtime)
    hit = _MODEL_REGISTRY.get(key)
    if hit is None:
        stale = [k for k in _MODEL_REGISTRY if k[0] == key[0]]
        for k in stale:
            del _MODEL_REGISTRY[k]
        hit = _MODEL_REGISTRY[key] = _wrap_data_errors(load_any_model, p)
    return hit


def _wrap_data_errors(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ManifestError, ExampleError, AudioFileError, CheckpointError,
            MissingHeadError, FileNotFoundError) as exc:
        raise DataError(str(exc)) from exc


def health() -> S.HealthResponse:
    from .. import __version__
    return S.HealthResponse(version=__version__)


def prepare_synthetic(req: S.SyntheticRequest) -> S.SyntheticResponse:
    spec = SyntheticSpec(examples_per_class=req.examples_per_class, seed=req.seed)
    manifest = generate_synthetic(spec, req.out_dir)
    entries = load_manifest(manifest)
    n_train = sum(1 for e in entries if e.split == "train")
    self_test = None
    if req.self_test:
        self_test = separability_self_test(manifest)
    return S.SyntheticResponse(manifest=str(manifest), n_examples=len(entries),
                               n_train=n_train, n_val=len(entries) - n_train,
                               self_test=self_test)


def extract_features(req: S.FeatureRequest) -> S.FeatureResponse:
    wav = Path(req.wav)
    if not wav.exists():
        raise DataError(f"no such WAV file: {wav}")
    clip = _wrap_data_errors(read_wav, wav)
    clip = _wrap_data_errors(resample_48k_to_44k1, clip)
    rep = make_rep(clip, req.filterbank)
    out = Path(req.out)
    save_rep(out, rep)
    return S.FeatureResponse(array_file=str(out.with_suffix(".bin")),
                             sidecar_file=str(out.with_suffix(".json")),
                             shape=list(rep.values.shape),
                             filterbank=req.filterbank)


def train(req: S.TrainRequest) -> S.TrainResponse:
    overrides = dict(req.config or {})
    overrides.pop("stage", None)
    try:
        config = TrainConfig.for_stage(req.stage, **overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad training config: {exc}") from exc
    result = _wrap_data_errors(
        run_stage, config, req.manifest, req.out_dir,
        audio_checkpoint=req.audio_checkpoint,
        visual_checkpoint=req.visual_checkpoint,
        fusion_checkpoint=req.fusion_checkpoint,
        cache_dir=req.cache_dir)
    hist = result.history
    return S.TrainResponse(checkpoint=str(result.checkpoint_path),
                           history_csv=str(Path(req.out_dir) / "history.csv"),
                           history_json=str(Path(req.out_dir) / "history.json"),
                           epochs_run=len(hist.records),
                           best_epoch=hist.best_epoch,
                           best_val_acc=hist.best_val_acc,
                           stop_reason=hist.stop_reason)


def evaluate(req: S.EvaluateRequest) -> S.EvaluateResponse:
    report = _wrap_data_errors(evaluate_checkpoint, req.checkpoint, req.manifest,
                               req.split, cache_dir=req.cache_dir)
    files: list[str] = []
    if req.out_dir:
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fmt in req.formats:
            if fmt == "json":
                files.append(str(render_json(report, out / "report.json")))
            elif fmt == "csv":
                files.extend(str(p) for p in render_csv(report, out))
            elif fmt == "text":
                render_text(report, out / "report.txt")
                files.append(str(out / "report.txt"))
            else:
                raise UsageError(f"unknown report format {fmt!r}")
    return S.EvaluateResponse(report=report.to_dict(), files=files)


def predict(req: S.PredictRequest) -> S.PredictResponse:
    kind, model, extra = _load_model_cached(req.checkpoint)
    filterbank = extra.get("filterbank", "gammatone")
    heads: dict[str, list[float]] = {}

    if kind in ("audio",):
        clip = _wrap_data_errors(_read_clip, req.audio)
        heads["audio"] = predict_audio_clip(model, clip, filterbank).tolist()
    elif kind == "visual":
        feats = _frames_features(req, model)
        heads["visual"] = predict_visual_features(model, feats).tolist()
    else:
        clip = _wrap_data_errors(_read_clip, req.audio)
        feats = _frames_features(req, model.visual_net)
        bundle = model.predict_clip(clip, feats, filterbank)
        heads = {h: bundle.head(h).tolist() for h in bundle.HEADS}
    argmax = {h: CLASSES[int(np.argmax(v))] for h, v in heads.items()}
    return S.PredictResponse(heads=heads, argmax=argmax)


def _read_clip(path: str):
    clip = read_wav(path)
    return resample_48k_to_44k1(clip)


def _frames_features(req: S.PredictRequest, visual_net) -> np.ndarray:
    if not req.frames_dir:
        raise UsageError("this checkpoint needs --frames-dir with 50 frame PNGs")
    pixels = _wrap_data_errors(load_frame_pixels, Path(req.frames_dir))
    seq = normalize_frames(pixels, visual_net.backbone.normalization)
    return visual_net.backbone_forward(seq).data.astype(np.float32)


def params(req: S.ParamsRequest) -> S.ParamsResponse:
    if req.checkpoint:
        rows = _wrap_data_errors(budget_rows_from_checkpoint, req.checkpoint)
    else:
        try:
            rows = _wrap_data_errors(budget_rows, req.backbone, req.backbone_seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return S.ParamsResponse(rows=rows, table=format_budget(rows))


def gradcheck(req: S.GradcheckRequest) -> S.GradcheckResponse:
    from ..gradsuite import CASES
    if req.cases:
        known = {c.name for c in CASES}
        unknown = [c for c in req.cases if c not in known]
        if unknown:
            raise UsageError(f"unknown gradcheck case(s) {unknown}; "
                             f"known: {sorted(known)}")
    results = run_suite(n_seeds=req.seeds, names=req.cases)
    items = [S.GradcheckCaseResult(name=r.name, max_error=r.max_error, h=r.h,
                                   seeds=r.seeds, seconds=r.seconds,
                                   passed=r.passed) for r in results]
    return S.GradcheckResponse(results=items,
                               passed=all(r.passed for r in results),
                               tolerance=TOLERANCE)
