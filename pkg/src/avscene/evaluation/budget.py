"""Parameter budget table: total and trainable counts per module under the
stage-3 freezing convention (backbone frozen inside the visual module,
both subnetworks frozen for the fusion row)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from ..models.audio_net import AudioNet, AudioNetConfig
from ..models.fusion import AVModel
from ..models.visual_net import VisualNet
from ..training.serialize import backbone_from_spec, load_any_model


def budget_rows(backbone: str = "tiny", backbone_seed: int = 0,
                audio_config: Optional[AudioNetConfig] = None) -> list[dict]:
    audio = AudioNet(audio_config or AudioNetConfig())
    bb = backbone_from_spec(backbone, backbone_seed)
    bb.freeze()
    visual = VisualNet(bb)
    model = AVModel(audio, visual)
    fusion = model.fusion_param_set()
    rows = [
        {"module": "audio", "total": audio.count(),
         "trainable": audio.count(trainable_only=True)},
        {"module": "visual", "total": visual.count(),
         "trainable": visual.count(trainable_only=True)},
        {"module": "fusion", "total": fusion.count(),
         "trainable": fusion.count(trainable_only=True)},
        {"module": "full", "total": model.count(),
         "trainable": fusion.count(trainable_only=True)},
    ]
    return rows


def budget_rows_from_checkpoint(checkpoint: str | Path) -> list[dict]:
    """Counts with the checkpoint's actual trainable flags, per namespace."""
    kind, model, _ = load_any_model(Path(checkpoint))
    params = model.param_set()
    if kind == "audio":
        groups = {"audio": params}
    elif kind == "visual":
        groups = {"visual": params}
    else:
        groups = {
            "audio": params.prefixed("audio/"),
            "visual": params.prefixed("visual/"),
            "fusion": params.prefixed("fusion/"),
            "full": params,
        }
    return [{"module": name, "total": ps.count(),
             "trainable": ps.count(trainable_only=True)}
            for name, ps in groups.items()]


def format_budget(rows: list[dict]) -> str:
    width = max(len(r["module"]) for r in rows) + 2
    lines = ["module".ljust(width) + f"{'total':>12}{'trainable':>12}"]
    lines.append("-" * (width + 24))
    for r in rows:
        lines.append(r["module"].ljust(width)
                     + f"{r['total']:>12,}{r['trainable']:>12,}")
    return "\n".join(lines) + "\n"
