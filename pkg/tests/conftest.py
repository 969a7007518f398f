import numpy as np
import pytest

from avscene.data import SyntheticSpec, generate_synthetic

# acceptance tests append (name, passed, detail) here; the terminal
# summary prints one line per criterion
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        flag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{flag}] {name}: {detail}")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def micro_dataset(tmp_path_factory):
    """60-example synthetic set (6 per class), shared across the session."""
    root = tmp_path_factory.mktemp("micro_data")
    manifest = generate_synthetic(SyntheticSpec(examples_per_class=6, seed=42), root)
    return manifest


@pytest.fixture(scope="session")
def micro_audio_checkpoint(micro_dataset, tmp_path_factory):
    """A small trained audio checkpoint for eval/predict/service tests."""
    from avscene.training import TrainConfig, run_stage
    out = tmp_path_factory.mktemp("micro_audio")
    cfg = TrainConfig.for_stage("audio", max_epochs=2, seed=5,
                                record_walltime=False)
    result = run_stage(cfg, micro_dataset, out)
    return result.checkpoint_path


@pytest.fixture(scope="session")
def micro_visual_checkpoint(micro_dataset, tmp_path_factory):
    from avscene.training import TrainConfig, run_stage
    out = tmp_path_factory.mktemp("micro_visual")
    cfg = TrainConfig.for_stage("visual", max_epochs=3, seed=6,
                                record_walltime=False)
    result = run_stage(cfg, micro_dataset, out, cache_dir=out / "cache")
    return result.checkpoint_path


@pytest.fixture(scope="session")
def micro_av_checkpoint(micro_dataset, micro_audio_checkpoint,
                        micro_visual_checkpoint, tmp_path_factory):
    from avscene.training import TrainConfig, run_stage
    out = tmp_path_factory.mktemp("micro_fusion")
    cfg = TrainConfig.for_stage("fusion", max_epochs=2, seed=7,
                                record_walltime=False)
    result = run_stage(cfg, micro_dataset, out, cache_dir=out / "cache",
                       audio_checkpoint=micro_audio_checkpoint,
                       visual_checkpoint=micro_visual_checkpoint)
    return result.checkpoint_path
