import json

import numpy as np
import pytest

from imhrate.errors import InvalidModel, UnknownModel
from imhrate.modelspec import load_model, model_from_dict, parse_registry_uri


def test_parse_registry_uri_values():
    name, params = parse_registry_uri("registry:exponential?theta=0.5")
    assert name == "exponential" and params == {"theta": 0.5}
    name, params = parse_registry_uri("registry:dirichlet_multinomial?alpha=1,1&counts=2,3")
    assert params == {"alpha": [1, 1], "counts": [2, 3]}
    name, params = parse_registry_uri("registry:three_point")
    assert name == "three_point" and params == {}


def test_load_registry_models():
    assert load_model("registry:exponential?theta=0.5").kind == "general"
    assert load_model("registry:sharpness_phi2").kind == "discrete"
    assert load_model("registry:three_point").kind == "matrix"
    assert load_model("registry:uniform_rwmh?delta=1.5").kind == "mh"
    with pytest.raises(UnknownModel):
        load_model("registry:missing")


def test_discrete_json_roundtrip(tmp_path):
    doc = {"type": "discrete", "target": [0.5, 0.25, 0.25], "proposal": [0.25, 0.5, 0.25]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    loaded = load_model(str(path))
    assert loaded.kind == "discrete"
    assert loaded.model.weight[0] == 2.0


def test_general_json_with_hint_override():
    doc = {
        "type": "general",
        "registry": "exponential",
        "params": {"theta": 0.5},
        "hints": {"weight_monotone": "decreasing", "known_wstar": 2.0,
                  "known_argmax": 0.0, "wstar_attained": True},
    }
    loaded = model_from_dict(doc)
    assert loaded.model.hints.known_wstar == 2.0
    with pytest.raises(InvalidModel):
        model_from_dict({**doc, "hints": {"bogus_field": 1}})


def test_matrix_json():
    doc = {
        "type": "matrix",
        "matrix": [[1 / 3, 1 / 3, 1 / 3], [1 / 3, 2 / 3, 0.0], [1 / 3, 0.0, 2 / 3]],
        "stationary": [1 / 3, 1 / 3, 1 / 3],
    }
    loaded = model_from_dict(doc)
    assert loaded.kind == "matrix"
    assert np.allclose(loaded.model.kernel.entries.sum(axis=1), 1.0)


def test_bad_documents_rejected(tmp_path):
    with pytest.raises(InvalidModel):
        model_from_dict({"type": "general"})
    with pytest.raises(InvalidModel):
        model_from_dict({"no_type": 1})
    with pytest.raises(UnknownModel):
        load_model(str(tmp_path / "absent.json"))
