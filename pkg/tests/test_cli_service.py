import base64
import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from logan import checkpoint as ckpt_mod
from logan.cli import main
from logan.colors import CLASSES, canonical_shade
from logan.config import TrainConfig, save_config
from logan.dataset import synth_corpus
from logan.service import bundle_checksum, create_app
from logan.training import train


def tiny_config(**overrides):
    defaults = dict(
        epochs=1,
        n_critic=2,
        batch_size=6,
        z_dim=8,
        g_base_channels=8,
        dq_base_channels=8,
    )
    defaults.update(overrides)
    return TrainConfig(**defaults)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    result = train(tiny_config(), synth_corpus(1, seed=3), out_dir=out)
    return result


@pytest.fixture(scope="module")
def client(trained):
    bundle, _ = ckpt_mod.load_checkpoint(trained.checkpoints[-1])
    return TestClient(create_app(bundle)), bundle


# ---------------------------------------------------------------------------
# HTTP API
# ---------------------------------------------------------------------------

def test_classes_endpoint(client):
    c, _ = client
    resp = c.get("/classes")
    assert resp.status_code == 200
    assert resp.json() == list(CLASSES)


def test_health_reports_checkpoint(client):
    c, bundle = client
    resp = c.get("/health")
    assert resp.status_code == 200
    assert resp.json()["checkpoint"] == bundle.checkpoint_id


def test_generate_deterministic_under_seed(client):
    c, _ = client
    body = {"class": "blue", "count": 4, "seed": 9}
    a = c.post("/generate", json=body).json()
    b = c.post("/generate", json=body).json()
    assert a == b
    assert a["seed_used"] == 9
    assert len(a["images"]) == 4


def test_generate_fresh_seed_echoed(client):
    c, _ = client
    a = c.post("/generate", json={"class": "red", "count": 1}).json()
    assert isinstance(a["seed_used"], int)


def test_generate_count_bounds(client):
    c, _ = client
    assert c.post("/generate", json={"class": "red", "count": 0}).status_code == 400
    assert c.post("/generate", json={"class": "red", "count": 257}).status_code == 400


def test_generate_malformed_body_field_message(client):
    c, _ = client
    resp = c.post("/generate", json={"count": 4})
    assert resp.status_code == 400
    assert any(d["field"] == "class" for d in resp.json()["detail"])


def test_generate_unknown_class_lists_valid_ones(client):
    c, _ = client
    resp = c.post("/generate", json={"class": "crimson", "count": 1})
    assert resp.status_code == 400
    message = resp.json()["detail"][0]["message"]
    for cls in CLASSES:
        assert cls in message


def test_generate_64_gives_256_square_grid(client):
    c, _ = client
    resp = c.post("/generate", json={"class": "cyan", "count": 64, "seed": 1}).json()
    assert len(resp["images"]) == 64
    grid = Image.open(io.BytesIO(base64.b64decode(resp["grid"])))
    assert grid.size == (256, 256)
    one = Image.open(io.BytesIO(base64.b64decode(resp["images"][0])))
    assert one.size == (32, 32)


def test_generate_grid_format_returns_png(client):
    c, _ = client
    resp = c.post("/generate?format=grid", json={"class": "pink", "count": 8, "seed": 2})
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "image/png"
    assert resp.headers["x-seed-used"] == "2"
    img = Image.open(io.BytesIO(resp.content))
    assert img.size == (256, 32)


def test_server_never_mutates_bundle(client):
    c, bundle = client
    before = bundle_checksum(bundle)
    for i in range(3):
        c.post("/generate", json={"class": CLASSES[i], "count": 16, "seed": i})
    c.get("/classes")
    c.get("/health")
    assert bundle_checksum(bundle) == before


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_generate_writes_png_and_grid(trained, tmp_path):
    out = tmp_path / "gen"
    rc = main([
        "generate", "--class", "red", "--count", "1", "--seed", "5",
        "--ckpt", str(trained.checkpoints[-1]), "--out", str(out),
    ])
    assert rc == 0
    assert (out / "red_000.png").exists()
    assert (out / "grid.png").exists()
    assert Image.open(out / "red_000.png").size == (32, 32)


def test_cli_generate_rejects_unknown_class(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--class", "crimson", "--count", "1"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    for cls in CLASSES:
        assert cls in err


def test_cli_generate_requires_checkpoint(monkeypatch):
    monkeypatch.delenv("LOGAN_CKPT", raising=False)
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--class", "red", "--count", "1"])
    assert exc.value.code == 2


def test_cli_env_var_checkpoint(trained, tmp_path, monkeypatch):
    monkeypatch.setenv("LOGAN_CKPT", str(trained.checkpoints[-1]))
    rc = main(["generate", "--class", "blue", "--count", "2", "--seed", "1",
               "--out", str(tmp_path / "g")])
    assert rc == 0


def test_cli_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_label_directory(tmp_path):
    for i, cls in enumerate(["red", "blue"]):
        arr = np.full((32, 32, 3), canonical_shade(cls), dtype=np.uint8)
        Image.fromarray(arr).save(tmp_path / f"icon{i}.png")
    out_csv = tmp_path / "labels.csv"
    rc = main(["label", str(tmp_path), str(out_csv)])
    assert rc == 0
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == 3
    assert "red" in lines[1] or "red" in lines[2]


def test_cli_label_missing_path_is_runtime_error(tmp_path, capsys):
    rc = main(["label", str(tmp_path / "missing"), str(tmp_path / "out.csv")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_train_synth(tmp_path):
    cfg_path = tmp_path / "train.cfg"
    save_config(tiny_config(), cfg_path)
    out = tmp_path / "run"
    rc = main(["train", str(cfg_path), "--synth", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "latest").exists()
    assert (out / "loss_log.csv").exists()


def test_cli_evaluate_with_oracle_bundle(tmp_path, monkeypatch):
    from tests_support_oracle import CanonicalStubBundle

    monkeypatch.setattr(
        ckpt_mod, "load_checkpoint", lambda path: (CanonicalStubBundle(), {})
    )
    report_path = tmp_path / "report.json"
    rc = main([
        "evaluate", "--ckpt", "oracle.bin", "--out", str(report_path),
        "--n-per-class", "4", "--seed", "7",
    ])
    assert rc == 0
    report = json.loads(report_path.read_text())
    for cls in CLASSES:
        assert report["per_class"][cls]["f1"] == 1.0
    assert report["averages"]["f1"] == 1.0
