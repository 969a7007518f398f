"""Report serialization: text, CSV and JSON renderings of an EvalReport.

The CSV rendering writes ``summary.csv``, ``classwise.csv`` and one
``confusion_<head>.csv`` per head into a directory; floats are written in
shortest round-trip notation so json -> csv -> json is lossless.
Schema version 1.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .metrics import EvalReport

REPORT_SCHEMA_VERSION = 1


def render_json(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    payload = {"schema_version": REPORT_SCHEMA_VERSION, **report.to_dict()}
    path.write_text(json.dumps(payload, indent=1, sort_keys=True))
    return path


def load_json(path: str | Path) -> EvalReport:
    payload = json.loads(Path(path).read_text())
    return EvalReport.from_dict(payload)


def render_csv(report: EvalReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    summary = out / "summary.csv"
    with summary.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["head", "accuracy", "log_loss", "n_examples"])
        for head in report.heads:
            w.writerow([head, repr(report.accuracy[head]),
                        repr(report.log_loss[head]), report.n_examples])
    written.append(summary)

    classwise = out / "classwise.csv"
    with classwise.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class"] + report.heads)
        for i, name in enumerate(report.classes):
            w.writerow([name] + [repr(report.class_accuracy[h][i])
                                 for h in report.heads])
        w.writerow(["mean"] + [repr(report.accuracy[h]) for h in report.heads])
    written.append(classwise)

    for head in report.heads:
        conf = out / f"confusion_{head}.csv"
        with conf.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["true\\pred"] + list(report.classes))
            for i, name in enumerate(report.classes):
                w.writerow([name] + list(report.confusion[head][i]))
        written.append(conf)
    return written


def load_csv(out_dir: str | Path) -> EvalReport:
    out = Path(out_dir)
    with (out / "summary.csv").open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    heads = [r[0] for r in rows]
    accuracy = {r[0]: float(r[1]) for r in rows}
    log_loss = {r[0]: float(r[2]) for r in rows}
    n_examples = int(rows[0][3]) if rows else 0

    with (out / "classwise.csv").open(newline="") as fh:
        table = list(csv.reader(fh))
    classes = [r[0] for r in table[1:-1]]
    class_accuracy = {h: [] for h in heads}
    for row in table[1:-1]:
        for j, h in enumerate(heads):
            class_accuracy[h].append(float(row[1 + j]))

    confusion = {}
    for head in heads:
        with (out / f"confusion_{head}.csv").open(newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        confusion[head] = [[int(x) for x in r[1:]] for r in rows]
    return EvalReport(heads=heads, classes=classes, n_examples=n_examples,
                      accuracy=accuracy, log_loss=log_loss,
                      class_accuracy=class_accuracy, confusion=confusion)


def render_text(report: EvalReport, path: str | Path | None = None) -> str:
    width = max(len(c) for c in report.classes) + 2
    lines = []
    header = "class".ljust(width) + "".join(h.rjust(10) for h in report.heads)
    lines.append(header)
    lines.append("-" * len(header))
    for i, name in enumerate(report.classes):
        row = name.ljust(width) + "".join(
            f"{report.class_accuracy[h][i]:10.3f}" for h in report.heads)
        lines.append(row)
    lines.append("-" * len(header))
    lines.append("mean".ljust(width) + "".join(
        f"{report.accuracy[h]:10.3f}" for h in report.heads))
    lines.append("log-loss".ljust(width) + "".join(
        f"{report.log_loss[h]:10.3f}" for h in report.heads))
    lines.append(f"n = {report.n_examples}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def report_render(report: EvalReport, fmt: str, out: str | Path):
    """Dispatch on format; returns the written path(s) or the text."""
    if fmt == "json":
        return render_json(report, out)
    if fmt == "csv":
        return render_csv(report, out)
    if fmt == "text":
        return render_text(report, out)
    raise ValueError(f"unknown report format {fmt!r} (text|csv|json)")
