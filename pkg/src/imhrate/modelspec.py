"""Model sources: JSON files and registry URIs.

Accepted JSON documents (one object per file):

  {"type": "discrete", "target": [...], "proposal": [...]}
      Inline probability vectors; canonicalized on load.

  {"type": "general", "registry": "<name>", "params": {...}, "hints": {...}}
      Continuous densities come from the built-in registry by name; "hints"
      optionally overrides the model's structure hints.

  {"type": "matrix", "matrix": [[...]], "stationary": [...]}
      A raw row-stochastic kernel with its stationary vector, for fixtures
      that are not independence samplers.

Registry URIs ("registry:<name>?key=value&...") address the same builders
from the command line; values parse as int, float, bool, or comma-separated
numeric lists.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from urllib.parse import parse_qsl, urlsplit

from .discrete import MatrixChain, TransitionMatrix
from .errors import InvalidModel, UnknownModel
from .measures import DiscreteModel, GeneralModel, StructureHints
from .registry import REGISTRY, MhFixture, registry_entry

__all__ = ["LoadedModel", "load_model", "parse_registry_uri", "model_from_dict"]


@dataclass(frozen=True)
class LoadedModel:
    model: Any
    kind: str  # "discrete" | "general" | "matrix" | "mh"
    label: str
    source: str


def _parse_value(text: str):
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t != ""]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_registry_uri(uri: str) -> tuple[str, dict]:
    body = uri[len("registry:"):]
    parts = urlsplit("//" + body)
    name = parts.netloc or body.split("?", 1)[0]
    params = {k: _parse_value(v) for k, v in parse_qsl(parts.query)}
    return name, params


def _hints_from_dict(d: dict) -> StructureHints:
    allowed = {"weight_monotone", "known_argmax", "known_wstar", "wstar_attained"}
    bad = set(d) - allowed
    if bad:
        raise InvalidModel(f"unknown hint fields: {sorted(bad)}")
    return StructureHints(**d)


def _kind_of(obj) -> str:
    if isinstance(obj, DiscreteModel):
        return "discrete"
    if isinstance(obj, GeneralModel):
        return "general"
    if isinstance(obj, MatrixChain):
        return "matrix"
    if isinstance(obj, MhFixture):
        return "mh"
    raise UnknownModel(f"registry produced an unsupported object {type(obj).__name__}")


def model_from_dict(doc: dict, source: str = "<dict>") -> LoadedModel:
    if not isinstance(doc, dict) or "type" not in doc:
        raise InvalidModel("model document must be an object with a 'type' field")
    kind = doc["type"]
    if kind == "discrete":
        model = DiscreteModel.from_pmfs(doc["target"], doc["proposal"],
                                        label=doc.get("label", "discrete"))
        return LoadedModel(model=model, kind="discrete", label=model.label, source=source)
    if kind == "general":
        name = doc.get("registry")
        if not name:
            raise InvalidModel("general models name a registry entry via 'registry'")
        entry = registry_entry(name)
        model = entry.build(**doc.get("params", {}))
        if "hints" in doc:
            if not isinstance(model, GeneralModel):
                raise InvalidModel(f"registry entry {name!r} does not take hints")
            model = dataclasses.replace(model, hints=_hints_from_dict(doc["hints"]))
        return LoadedModel(model=model, kind=_kind_of(model),
                           label=getattr(model, "label", name), source=source)
    if kind == "matrix":
        chain = MatrixChain(
            kernel=TransitionMatrix.from_rows(doc["matrix"]),
            stationary=doc["stationary"],
            label=doc.get("label", "matrix"),
        )
        return LoadedModel(model=chain, kind="matrix", label=chain.label, source=source)
    raise InvalidModel(f"unknown model type {kind!r}")


def load_model(source: str) -> LoadedModel:
    """Resolve a model source: registry URI or path to a JSON document."""
    if source.startswith("registry:"):
        name, params = parse_registry_uri(source)
        if name not in REGISTRY:
            raise UnknownModel(
                f"unknown registry model {name!r}; known: {', '.join(sorted(REGISTRY))}"
            )
        model = REGISTRY[name].build(**params)
        return LoadedModel(model=model, kind=_kind_of(model),
                           label=getattr(model, "label", name), source=source)
    path = Path(source)
    if not path.exists():
        raise UnknownModel(f"model source {source!r} is neither a registry URI nor a file")
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_dict(doc, source=str(path))
