"""Config-file parsing for the command-line front end.

A model config is a JSON document with optional sections:

    {
      "model":    {"family": "auction", "params": {"v": 0.5, "kappa": 0.5}},
      "noise":    {"nodes": 41},
      "controls": {"lo": 0.0, "step": 0.01, "count": 301},
      "domain":   {"x_lo": -0.5, "x_hi": 3.0, "T": 1.0},
      "mesh":     {"dx": 0.01, "dt": 0.0001, "node_cap": 4194304}
    }

Every section is optional; an empty document gives the standard auction
model. Unknown sections or keys are configuration errors rather than silent
typos.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .meshes import DEFAULT_NODE_CAP
from .model import Domain, ModelSpec, make_auction_model, make_bump_model, make_control_grid

_SECTIONS = {"model", "noise", "controls", "domain", "mesh"}

# external key -> constructor argument
_AUCTION_KEYS = {
    "v": "item_value",
    "comp_lo": "comp_lo",
    "comp_hi": "comp_hi",
    "kappa": "weight",
    "r0": "anchor",
    "noise_half_width": "noise_half_width",
    "dynamics_scale": "dynamics_scale",
}
_BUMP_KEYS = {"skew": "skew", "revert_rate": "revert_rate"}


@dataclass(frozen=True)
class MeshOverrides:
    """Optional solver-grid overrides; None falls back to scheme defaults."""

    dx: float | None = None
    dt: float | None = None
    node_cap: int = DEFAULT_NODE_CAP


@dataclass(frozen=True)
class RunConfig:
    """Everything a command run needs beyond subcommand-specific arguments."""

    model: ModelSpec
    model_name: str
    model_path: str | None
    mesh: MeshOverrides
    epsilons: tuple[float, ...]
    seed: int
    n_paths: int
    out_dir: Path
    window: tuple[float, float]
    beta: float
    threads: int | None


def _check_keys(section: str, doc: dict, allowed) -> None:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown {section} key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _translate(family: str, params: dict, mapping: dict) -> dict:
    _check_keys(f"model.params ({family})", params, mapping)
    return {mapping[k]: v for k, v in params.items()}


def load_model_config(path=None) -> tuple[ModelSpec, str, MeshOverrides]:
    """Parse a config file into (model, family name, mesh overrides).

    `path=None` means no file was given: the standard auction model with
    default grids and no mesh overrides.
    """
    if path is None:
        return make_auction_model(), "auction", MeshOverrides()
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    _check_keys("config", doc, _SECTIONS)

    model_sec = doc.get("model", {})
    _check_keys("model", model_sec, {"family", "params"})
    family = model_sec.get("family", "auction")
    params = model_sec.get("params", {})

    controls = None
    if "controls" in doc:
        sec = doc["controls"]
        _check_keys("controls", sec, {"lo", "step", "count"})
        try:
            controls = make_control_grid(
                float(sec["lo"]), float(sec["step"]), int(sec["count"])
            )
        except KeyError as exc:
            raise ConfigurationError(f"controls section needs key {exc}") from None

    domain = None
    if "domain" in doc:
        sec = doc["domain"]
        _check_keys("domain", sec, {"x_lo", "x_hi", "T"})
        try:
            domain = Domain(float(sec["x_lo"]), float(sec["x_hi"]), float(sec["T"]))
        except KeyError as exc:
            raise ConfigurationError(f"domain section needs key {exc}") from None

    if family == "auction":
        kwargs = _translate(family, params, _AUCTION_KEYS)
        if "noise" in doc:
            _check_keys("noise", doc["noise"], {"nodes"})
            if "nodes" in doc["noise"]:
                kwargs["noise_nodes"] = int(doc["noise"]["nodes"])
        model = make_auction_model(domain=domain, controls=controls, **kwargs)
    elif family == "bump":
        if "noise" in doc:
            raise ConfigurationError(
                "noise.nodes applies to the auction family; the bump family's "
                "two-point law is set by model.params.skew"
            )
        kwargs = _translate(family, params, _BUMP_KEYS)
        model = make_bump_model(domain=domain, controls=controls, **kwargs)
    else:
        raise ConfigurationError(f"unknown model family {family!r}; known: auction, bump")

    mesh = MeshOverrides()
    if "mesh" in doc:
        sec = doc["mesh"]
        _check_keys("mesh", sec, {"dx", "dt", "node_cap"})
        mesh = MeshOverrides(
            dx=float(sec["dx"]) if "dx" in sec else None,
            dt=float(sec["dt"]) if "dt" in sec else None,
            node_cap=int(sec.get("node_cap", DEFAULT_NODE_CAP)),
        )
    return model, family, mesh
