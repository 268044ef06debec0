import json

import numpy as np
import pytest

from jdac.errors import ManifestError
from jdac.io import read_rvol, write_rvol
from jdac.pipeline import PipelineManifest, run_pipeline
from jdac.volume import make_phantom


@pytest.fixture
def clean_path(tmp_path):
    p = tmp_path / "clean.rvol"
    write_rvol(make_phantom((32, 32, 32), "ellipsoids", 1), p)
    return p


def test_unknown_key_rejected(clean_path):
    with pytest.raises(ManifestError, match="colour"):
        PipelineManifest.from_dict({"input": str(clean_path), "colour": "red"})


@pytest.mark.parametrize("d", [{}, {"input": "x", "outputs": {"plot": "a"}}, {"input": "x", "delta_lr": 2},
                               {"input": "x", "noise": "poisson:1"}, [1, 2]])
def test_invalid_manifests(d):
    with pytest.raises(ManifestError):
        PipelineManifest.from_dict(d)


def test_bad_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{")
    with pytest.raises(ManifestError):
        PipelineManifest.load(p)


def test_run(tmp_path, clean_path):
    m = PipelineManifest.from_dict({
        "input": str(clean_path), "artifact": "spike:1,0.5", "noise": "gaussian:0.1",
        "denoiser": "gauss", "corrector": "spike-notch", "seed": 3,
        "outputs": {"corrupted": str(tmp_path / "y.rvol"), "restored": str(tmp_path / "x.rvol"),
                    "report": str(tmp_path / "r.json"), "figure": str(tmp_path / "f.png")},
    })
    s = run_pipeline(m)
    assert s["restored"]["image"]["rmse"] < s["corrupted"]["image"]["rmse"]
    assert s["restored"]["gradient"]["rmse"] < s["corrupted"]["gradient"]["rmse"]
    assert json.loads((tmp_path / "r.json").read_text()) == json.loads(json.dumps(s))
    assert read_rvol(tmp_path / "x.rvol").dims == (32, 32, 32)
    assert (tmp_path / "f.png").read_bytes()[:4] == b"\x89PNG"
    y1 = read_rvol(tmp_path / "y.rvol").data
    run_pipeline(m)
    assert np.array_equal(y1, read_rvol(tmp_path / "y.rvol").data)
