"""FastAPI surface via TestClient."""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from avscene.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok" and body["version"]


def test_params_default_budget(client):
    resp = client.post("/params", json={})
    assert resp.status_code == 200
    rows = {r["module"]: r for r in resp.json()["rows"]}
    assert rows["audio"]["trainable"] == 322_269
    assert rows["visual"]["trainable"] == 105_482
    assert rows["fusion"]["trainable"] == 272_704
    assert "module" in resp.json()["table"]


def test_params_bad_backbone_is_422(client):
    resp = client.post("/params", json={"backbone": "resnet50"})
    assert resp.status_code == 422


def test_synthetic_and_features(client, tmp_path):
    out = tmp_path / "svc_data"
    resp = client.post("/synthetic", json={
        "out_dir": str(out), "examples_per_class": 1, "seed": 3})
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_examples"] == 10 and body["n_train"] == 10 - body["n_val"]

    wav = next((out / "audio").glob("*.wav"))
    resp = client.post("/features", json={
        "wav": str(wav), "out": str(tmp_path / "feat"), "filterbank": "mel"})
    assert resp.status_code == 200
    assert resp.json()["shape"] == [64, 500, 3]

    resp = client.post("/features", json={
        "wav": str(tmp_path / "missing.wav"), "out": str(tmp_path / "x")})
    assert resp.status_code == 400


def test_predict_endpoint(client, micro_audio_checkpoint, micro_dataset):
    from avscene.data import load_manifest
    entry = load_manifest(micro_dataset)[0]
    resp = client.post("/predict", json={
        "checkpoint": str(micro_audio_checkpoint),
        "audio": str(entry.audio_path)})
    assert resp.status_code == 200
    body = resp.json()
    probs = np.asarray(body["heads"]["audio"])
    assert probs.shape == (10,)
    assert abs(probs.sum() - 1.0) < 1e-6
    assert body["argmax"]["audio"] in {c for c in body["argmax"].values()}

    # registry: second call hits the cache and agrees
    again = client.post("/predict", json={
        "checkpoint": str(micro_audio_checkpoint),
        "audio": str(entry.audio_path)})
    assert again.json()["heads"]["audio"] == body["heads"]["audio"]


def test_predict_missing_checkpoint_400(client, micro_dataset, tmp_path):
    from avscene.data import load_manifest
    entry = load_manifest(micro_dataset)[0]
    resp = client.post("/predict", json={
        "checkpoint": str(tmp_path / "none.ckpt"),
        "audio": str(entry.audio_path)})
    assert resp.status_code == 400


def test_evaluate_endpoint(client, micro_audio_checkpoint, micro_dataset, tmp_path):
    resp = client.post("/evaluate", json={
        "checkpoint": str(micro_audio_checkpoint),
        "manifest": str(micro_dataset),
        "split": "val",
        "out_dir": str(tmp_path / "rep"),
        "formats": ["json", "csv", "text"]})
    assert resp.status_code == 200
    body = resp.json()
    assert body["report"]["n_examples"] == 20
    assert any(f.endswith("report.json") for f in body["files"])
    assert any(f.endswith("summary.csv") for f in body["files"])


def test_gradcheck_endpoint_subset(client):
    resp = client.post("/gradcheck", json={"seeds": 1, "cases": ["dense"]})
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is True
    assert body["results"][0]["name"] == "dense"

    resp = client.post("/gradcheck", json={"seeds": 1, "cases": ["bogus"]})
    assert resp.status_code == 422


def test_train_endpoint_micro(client, micro_dataset, tmp_path):
    resp = client.post("/train", json={
        "stage": "audio",
        "manifest": str(micro_dataset),
        "out_dir": str(tmp_path / "svc_train"),
        "config": {"max_epochs": 1, "seed": 2, "record_walltime": False}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["epochs_run"] == 1
    assert body["checkpoint"].endswith("audio.ckpt")

    # bad config key -> 422
    resp = client.post("/train", json={
        "stage": "audio", "manifest": str(micro_dataset),
        "out_dir": str(tmp_path / "svc_train2"),
        "config": {"not_a_key": 1}})
    assert resp.status_code == 422
