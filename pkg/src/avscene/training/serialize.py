"""Stage-model construction and checkpoint round-trips."""
from __future__ import annotations

from pathlib import Path

from ..engine.checkpoint import CheckpointError, load_checkpoint, load_into, save_checkpoint
from ..models.audio_net import AudioNet, AudioNetConfig
from ..models.fusion import AVModel
from ..models.visual_net import (Backbone, TinyBackbone, VisualNet,
                                 load_vgg16_backbone)


def backbone_from_spec(spec: str, seed: int = 0) -> Backbone:
    if spec == "tiny":
        return TinyBackbone(seed=seed)
    if spec.startswith("vgg16:"):
        return load_vgg16_backbone(spec.split(":", 1)[1])
    raise ValueError(f"unknown backbone spec {spec!r} (use 'tiny' or 'vgg16:<path>')")


def _backbone_meta(backbone: Backbone, seed: int) -> dict:
    if isinstance(backbone, TinyBackbone):
        return {"kind": "tiny", "seed": seed}
    return {"kind": "vgg16"}


def save_audio_model(path: Path, net: AudioNet, filterbank: str,
                     provenance: list[str], seed: int) -> None:
    extra = {"model": "audio", "audio_config": net.config.to_dict(),
             "filterbank": filterbank, "stage_provenance": provenance,
             "classes": net.config.n_classes}
    save_checkpoint(path, net.param_set(), extra=extra, seed=seed)


def save_visual_model(path: Path, net: VisualNet, backbone_seed: int,
                      provenance: list[str], seed: int) -> None:
    extra = {"model": "visual", "backbone": _backbone_meta(net.backbone, backbone_seed),
             "n_classes": net.n_classes, "stage_provenance": provenance}
    save_checkpoint(path, net.param_set(), extra=extra, seed=seed)


def save_av_model(path: Path, model: AVModel, filterbank: str, backbone_seed: int,
                  provenance: list[str], seed: int) -> None:
    extra = {"model": "av", "audio_config": model.audio_net.config.to_dict(),
             "backbone": _backbone_meta(model.visual_net.backbone, backbone_seed),
             "filterbank": filterbank, "n_classes": model.n_classes,
             "stage_provenance": provenance}
    save_checkpoint(path, model.param_set(), extra=extra, seed=seed)


def load_audio_model(path: Path) -> tuple[AudioNet, dict]:
    source, manifest = load_checkpoint(path)
    extra = manifest["extra"]
    if extra.get("model") != "audio":
        raise CheckpointError(f"{path} is a {extra.get('model')!r} checkpoint, "
                              "expected 'audio'")
    net = AudioNet(AudioNetConfig.from_dict(extra["audio_config"]))
    load_into(net.param_set(), source, strict=True)
    return net, extra


def _rebuild_backbone(meta: dict) -> Backbone:
    if meta["kind"] == "tiny":
        return TinyBackbone(seed=meta.get("seed", 0))
    # weights come from the checkpoint itself; build the empty architecture
    from ..models.visual_net import VGG16Backbone
    return VGG16Backbone()


def load_visual_model(path: Path) -> tuple[VisualNet, dict]:
    source, manifest = load_checkpoint(path)
    extra = manifest["extra"]
    if extra.get("model") != "visual":
        raise CheckpointError(f"{path} is a {extra.get('model')!r} checkpoint, "
                              "expected 'visual'")
    backbone = _rebuild_backbone(extra["backbone"])
    net = VisualNet(backbone, n_classes=extra.get("n_classes", 10))
    load_into(net.param_set(), source, strict=True)
    if extra["backbone"]["kind"] == "vgg16":
        backbone.freeze()
    return net, extra


def load_av_model(path: Path) -> tuple[AVModel, dict]:
    source, manifest = load_checkpoint(path)
    extra = manifest["extra"]
    if extra.get("model") != "av":
        raise CheckpointError(f"{path} is a {extra.get('model')!r} checkpoint, "
                              "expected 'av'")
    audio = AudioNet(AudioNetConfig.from_dict(extra["audio_config"]))
    backbone = _rebuild_backbone(extra["backbone"])
    visual = VisualNet(backbone, n_classes=extra.get("n_classes", 10))
    model = AVModel(audio, visual, n_classes=extra.get("n_classes", 10))
    load_into(model.param_set(), source, strict=True)
    return model, extra


def load_any_model(path: Path):
    """(kind, model, extra) for whichever stage checkpoint lives at ``path``."""
    _, manifest = load_checkpoint(path)
    kind = manifest["extra"].get("model")
    if kind == "audio":
        net, extra = load_audio_model(path)
    elif kind == "visual":
        net, extra = load_visual_model(path)
    elif kind == "av":
        net, extra = load_av_model(path)
    else:
        raise CheckpointError(f"{path}: unknown model kind {kind!r}")
    return kind, net, extra
