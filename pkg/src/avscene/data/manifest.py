"""Dataset manifest handling.

The manifest is a CSV with the fixed header
``id,audio_path,frames_dir,label,city,location,split``; relative paths
resolve against the manifest's directory. A JSON sidecar next to the
manifest may carry dataset-level metadata (the synthetic generator writes
one).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CLASSES = (
    "airport",
    "shopping_mall",
    "metro_station",
    "pedestrian_street",
    "public_square",
    "street_traffic",
    "tram",
    "bus",
    "metro",
    "urban_park",
)
CLASS_INDEX = {name: i for i, name in enumerate(CLASSES)}

MANIFEST_HEADER = ["id", "audio_path", "frames_dir", "label", "city", "location", "split"]
FRAMES_PER_CLIP = 50
FRAME_PATTERN = "frame_{:03d}.png"


class ManifestError(ValueError):
    pass


@dataclass
class ManifestEntry:
    example_id: str
    audio_path: Path
    frames_dir: Path
    label: str
    city: str
    location_id: str
    split: str

    @property
    def label_index(self) -> int:
        return CLASS_INDEX[self.label]

    def frame_paths(self) -> list[Path]:
        return [self.frames_dir / FRAME_PATTERN.format(i)
                for i in range(FRAMES_PER_CLIP)]


def load_manifest(path: str | Path, check_paths: bool = True) -> list[ManifestEntry]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    root = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path} is empty") from None
        if header != MANIFEST_HEADER:
            raise ManifestError(f"{path}: bad header {header!r}, expected "
                                f"{MANIFEST_HEADER!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"{path}:{lineno}: expected "
                                    f"{len(MANIFEST_HEADER)} columns, got {len(row)}")
            eid, audio, frames, label, city, location, split = row
            if eid in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate id {eid!r}")
            seen.add(eid)
            if label not in CLASS_INDEX:
                raise ManifestError(f"{path}:{lineno}: unknown label {label!r}")
            if split not in ("train", "val"):
                raise ManifestError(f"{path}:{lineno}: split must be train|val, "
                                    f"got {split!r}")
            entry = ManifestEntry(eid, root / audio, root / frames, label,
                                  city, location, split)
            if check_paths:
                if not entry.audio_path.exists():
                    raise ManifestError(f"{path}:{lineno}: missing audio file "
                                        f"{entry.audio_path}")
                if not entry.frames_dir.is_dir():
                    raise ManifestError(f"{path}:{lineno}: missing frames dir "
                                        f"{entry.frames_dir}")
            entries.append(entry)
    if not entries:
        raise ManifestError(f"{path} holds no examples")
    return entries


def split_report(entries: list[ManifestEntry]) -> dict[str, float]:
    n = len(entries)
    train = sum(1 for e in entries if e.split == "train")
    return {"train": train / n, "val": (n - train) / n, "n": n}


def by_split(entries: list[ManifestEntry], split: str) -> list[ManifestEntry]:
    chosen = [e for e in entries if e.split == split]
    if not chosen:
        raise ManifestError(f"no entries in split {split!r}")
    return chosen


def write_manifest(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow([row[k] for k in MANIFEST_HEADER])
