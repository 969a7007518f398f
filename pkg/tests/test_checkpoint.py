"""Checkpoint archive: bit-exact round trips, deterministic bytes,
structured load errors."""
import numpy as np
import pytest

from avscene.engine import (CheckpointError, ParamSet, Tensor, load_checkpoint,
                            load_into, save_checkpoint)


def _params(dtype=np.float32):
    rng = np.random.default_rng(0)
    ps = ParamSet()
    ps.add("layer/kernel", Tensor(rng.standard_normal((4, 3)).astype(dtype),
                                  requires_grad=True))
    ps.add("layer/bias", Tensor(rng.standard_normal(3).astype(dtype),
                                requires_grad=True))
    ps.add("bn/moving_mean", Tensor(np.zeros(3, dtype=dtype)))
    return ps


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_bit_exact_round_trip(tmp_path, dtype):
    ps = _params(dtype)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, ps, extra={"model": "test"}, seed=7)
    loaded, manifest = load_checkpoint(path)
    assert manifest["seed"] == 7
    assert manifest["extra"]["model"] == "test"
    for key in ps.paths():
        assert loaded[key].data.tobytes() == ps[key].data.tobytes()
        assert loaded[key].dtype == ps[key].dtype
        assert loaded[key].requires_grad == ps[key].requires_grad


def test_byte_identical_archives(tmp_path):
    ps = _params()
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, ps, extra={"k": 1}, seed=1)
    save_checkpoint(b, ps, extra={"k": 1}, seed=1)
    assert a.read_bytes() == b.read_bytes()


def test_trainable_flags_round_trip(tmp_path):
    ps = _params()
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, ps)
    loaded, _ = load_checkpoint(path)
    assert loaded["layer/kernel"].requires_grad
    assert not loaded["bn/moving_mean"].requires_grad


def test_load_into_missing_parameter(tmp_path):
    source = _params()
    target = _params()
    target.add("extra/weight", Tensor(np.zeros(2), requires_grad=True))
    with pytest.raises(CheckpointError, match="extra/weight"):
        load_into(target, source, strict=True)


def test_load_into_shape_mismatch():
    source = ParamSet()
    source.add("w", Tensor(np.zeros((2, 2))))
    target = ParamSet()
    target.add("w", Tensor(np.zeros((3, 2))))
    with pytest.raises(CheckpointError, match="shape mismatch for 'w'"):
        load_into(target, source)


def test_load_into_unexpected_parameter():
    source = ParamSet()
    source.add("w", Tensor(np.zeros(2)))
    source.add("stray", Tensor(np.zeros(2)))
    target = ParamSet()
    target.add("w", Tensor(np.zeros(2)))
    with pytest.raises(CheckpointError, match="stray"):
        load_into(target, source, strict=True)


def test_missing_file_and_bad_archive(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "nope.ckpt")
    import zipfile
    bad = tmp_path / "bad.ckpt"
    with zipfile.ZipFile(bad, "w") as zf:
        zf.writestr("unrelated.txt", "hi")
    with pytest.raises(CheckpointError, match="manifest"):
        load_checkpoint(bad)


def test_model_round_trip_preserves_forward(tmp_path):
    from avscene.engine import rng_from_seed
    from avscene.models import AudioNet, AudioNetConfig
    from avscene.training import load_audio_model, save_audio_model
    net = AudioNet(AudioNetConfig(seed=11))
    path = tmp_path / "audio.ckpt"
    save_audio_model(path, net, "gammatone", ["audio"], seed=11)
    loaded, extra = load_audio_model(path)
    assert extra["filterbank"] == "gammatone"
    x = Tensor(rng_from_seed(0).standard_normal((64, 50, 3)).astype(np.float32))
    p1 = net.forward(x).probs.data
    p2 = loaded.forward(x).probs.data
    assert p1.tobytes() == p2.tobytes()
