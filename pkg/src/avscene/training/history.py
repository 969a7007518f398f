"""Per-epoch training records."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

CSV_HEADER = ["epoch", "train_loss", "val_loss", "val_acc", "lr", "seconds"]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float
    lr: float
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = "max_epochs"

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    @property
    def best_val_acc(self) -> float:
        if not self.records:
            return float("nan")
        return max(r.val_acc for r in self.records)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in self.records:
                writer.writerow([r.epoch, f"{r.train_loss:.6f}", f"{r.val_loss:.6f}",
                                 f"{r.val_acc:.6f}", f"{r.lr:.8g}", f"{r.seconds:.3f}"])

    def to_json(self, path: str | Path) -> None:
        payload = {
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
            "records": [asdict(r) for r in self.records],
        }
        Path(path).write_text(json.dumps(payload, indent=1))

    @staticmethod
    def from_json(path: str | Path) -> "TrainHistory":
        payload = json.loads(Path(path).read_text())
        hist = TrainHistory(best_epoch=payload["best_epoch"],
                            stop_reason=payload["stop_reason"])
        for r in payload["records"]:
            hist.append(EpochRecord(**r))
        return hist
