"""Command-line surface: thin client over the service handlers.

Every subcommand parses arguments into the service request models,
invokes the shared handler in process, and prints the response; `serve`
exposes the same handlers over HTTP. Exit codes: 0 success, 2 argument
error, 3 data error, 4 check failure.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_DATA_ERROR = 3
EXIT_CHECK_FAILURE = 4


def _limit_blas_threads() -> None:
    # single-threaded BLAS: bit-reproducible and faster on small cores
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=1, user_api="blas")
    except Exception:  # pragma: no cover
        pass


def _run(handler, request):
    from .service.handlers import DataError, UsageError
    try:
        return handler(request)
    except UsageError as exc:
        raise click.UsageError(str(exc))
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA_ERROR)


@click.group()
def main() -> None:
    """Audio-visual scene classification engine."""
    _limit_blas_threads()


@main.command("prepare-synthetic")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--examples-per-class", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--self-test", is_flag=True, help="run the separability self-test")
def prepare_synthetic(out_dir: str, examples_per_class: int, seed: int,
                      self_test: bool) -> None:
    """Generate the complementary-modality synthetic dataset."""
    from .service import handlers, schemas
    resp = _run(handlers.prepare_synthetic, schemas.SyntheticRequest(
        out_dir=out_dir, examples_per_class=examples_per_class, seed=seed,
        self_test=self_test))
    click.echo(json.dumps(resp.model_dump(), indent=1))


@main.command("extract-features")
@click.option("--wav", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--filterbank", default="gammatone", show_default=True,
              type=click.Choice(["mel", "gammatone"]))
def extract_features(wav: str, out: str, filterbank: str) -> None:
    """Write the (64, T, 3) representation of a WAV plus a JSON sidecar."""
    from .service import handlers, schemas
    resp = _run(handlers.extract_features, schemas.FeatureRequest(
        wav=wav, out=out, filterbank=filterbank))
    click.echo(json.dumps(resp.model_dump(), indent=1))


@main.command("train")
@click.option("--stage", required=True,
              type=click.Choice(["audio", "visual", "fusion", "finetune"]))
@click.option("--data", "manifest", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(),
              help="JSON file of TrainConfig overrides")
@click.option("--audio-checkpoint", type=click.Path())
@click.option("--visual-checkpoint", type=click.Path())
@click.option("--fusion-checkpoint", type=click.Path())
@click.option("--cache-dir", type=click.Path())
@click.option("--quiet", is_flag=True)
def train(stage: str, manifest: str, out_dir: str, config_path: str | None,
          audio_checkpoint, visual_checkpoint, fusion_checkpoint, cache_dir,
          quiet: bool) -> None:
    """Run one training stage and write checkpoint + history."""
    from .service import handlers, schemas
    overrides = {}
    if config_path:
        try:
            overrides = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {config_path}: {exc}")
    if not quiet:
        import logging
        logging.basicConfig(level=logging.INFO, format="%(message)s")
    resp = _run(handlers.train, schemas.TrainRequest(
        stage=stage, manifest=manifest, out_dir=out_dir, config=overrides,
        audio_checkpoint=audio_checkpoint, visual_checkpoint=visual_checkpoint,
        fusion_checkpoint=fusion_checkpoint, cache_dir=cache_dir))
    click.echo(json.dumps(resp.model_dump(), indent=1))


@main.command("evaluate")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--data", "manifest", required=True, type=click.Path())
@click.option("--split", default="val", show_default=True,
              type=click.Choice(["train", "val"]))
@click.option("--out", "out_dir", type=click.Path())
@click.option("--format", "formats", multiple=True, default=("json", "csv", "text"),
              show_default=True, type=click.Choice(["json", "csv", "text"]))
@click.option("--cache-dir", type=click.Path())
def evaluate(checkpoint: str, manifest: str, split: str, out_dir, formats,
             cache_dir) -> None:
    """Score a checkpoint over a manifest split; prints the text table."""
    from .evaluation.report import render_text
    from .evaluation.metrics import EvalReport
    from .service import handlers, schemas
    resp = _run(handlers.evaluate, schemas.EvaluateRequest(
        checkpoint=checkpoint, manifest=manifest, split=split,
        out_dir=out_dir, formats=list(formats), cache_dir=cache_dir))
    click.echo(render_text(EvalReport.from_dict(resp.report)))
    for f in resp.files:
        click.echo(f"wrote {f}")


@main.command("predict")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--audio", required=True, type=click.Path())
@click.option("--frames-dir", type=click.Path())
def predict(checkpoint: str, audio: str, frames_dir) -> None:
    """Per-head probabilities and labels for one 10 s example (JSON)."""
    from .service import handlers, schemas
    resp = _run(handlers.predict, schemas.PredictRequest(
        checkpoint=checkpoint, audio=audio, frames_dir=frames_dir))
    click.echo(json.dumps(resp.model_dump(), indent=1))


@main.command("params")
@click.option("--backbone", default="tiny", show_default=True,
              help="'tiny' or 'vgg16:<checkpoint>'")
@click.option("--backbone-seed", default=0, show_default=True)
@click.option("--checkpoint", type=click.Path(),
              help="count a trained checkpoint instead of the default build")
@click.option("--json", "as_json", is_flag=True)
def params(backbone: str, backbone_seed: int, checkpoint, as_json: bool) -> None:
    """Print the parameter budget table (total and trainable per module)."""
    from .service import handlers, schemas
    resp = _run(handlers.params, schemas.ParamsRequest(
        backbone=backbone, backbone_seed=backbone_seed, checkpoint=checkpoint))
    if as_json:
        click.echo(json.dumps(resp.rows, indent=1))
    else:
        click.echo(resp.table, nl=False)


@main.command("gradcheck")
@click.option("--seeds", default=10, show_default=True)
@click.option("--case", "cases", multiple=True,
              help="restrict to named cases (repeatable)")
def gradcheck(seeds: int, cases) -> None:
    """Run the finite-difference gradient suite; exit 4 on failure."""
    from .service import handlers, schemas
    resp = _run(handlers.gradcheck, schemas.GradcheckRequest(
        seeds=seeds, cases=list(cases) or None))
    for r in resp.results:
        flag = "PASS" if r.passed else "FAIL"
        click.echo(f"{flag} {r.name:26s} max_err={r.max_error:.3e} "
                   f"h={r.h:g} seeds={r.seeds} ({r.seconds:.1f}s)")
    if not resp.passed:
        click.echo(f"gradient check failed (tolerance {resp.tolerance:g})", err=True)
        sys.exit(EXIT_CHECK_FAILURE)
    click.echo(f"all cases below tolerance {resp.tolerance:g}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn
    from .service.app import create_app
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
