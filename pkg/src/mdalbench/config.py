"""JSON experiment configs: preset expansion, validation, defaults.

A config document mirrors ExperimentConfig plus a dataset block and an
optional output directory. Unknown keys are rejected with their key path;
a "preset" key expands first, then the document's own values override it.
"""

import json
from pathlib import Path

from mdalbench.data import SyntheticSpec
from mdalbench.engine import DatasetSpec, ExperimentConfig
from mdalbench.errors import ConfigError
from mdalbench.models.train import TrainParams
from mdalbench.presets import preset_doc

_TOP_KEYS = {
    "preset": str,
    "model": str,
    "strategy": str,
    "dataset": dict,
    "split": list,
    "hidden_dim": int,
    "optimizer": str,
    "learning_rate": (int, float),
    "lr_decay": (int, float, type(None)),
    "batch_size": int,
    "weight_decay": (int, float),
    "patience": int,
    "max_epochs": int,
    "val_fraction": (int, float),
    "lambda": (int, float),
    "budget": int,
    "initial_labeled": int,
    "al_batch_size": int,
    "repeats": int,
    "seed": int,
    "dump_scores": bool,
    "out": str,
}

_SYNTHETIC_KEYS = {
    "domains": int,
    "classes": int,
    "dim": int,
    "samples_per_domain": int,
    "noise": (int, float),
    "shift_norm": (int, float),
    "class_separation": (int, float),
    "conflict_fraction": (int, float),
    "rotation": (int, float),
}

_DEFAULTS = {
    "split": [0.8, 0.1, 0.1],
    "hidden_dim": 64,
    "optimizer": "adam",
    "learning_rate": 1e-3,
    "lr_decay": None,
    "batch_size": 32,
    "weight_decay": 0.0,
    "patience": 10,
    "max_epochs": 200,
    "val_fraction": 0.2,
    "lambda": 0.1,
    "repeats": 1,
    "seed": 0,
    "dump_scores": False,
}


def _check_keys(doc: dict, allowed: dict, path: str):
    for key, value in doc.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if not isinstance(value, allowed[key]) or (
                isinstance(value, bool) and allowed[key] is int):
            raise ConfigError(
                f"config key {path}{key!r} has wrong type {type(value).__name__}")


def load_config_doc(source) -> dict:
    """Read, expand the preset, apply defaults, and validate a config doc."""
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON ({exc})") from exc
    else:
        doc = dict(source)
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "")

    if "preset" in doc:
        base = preset_doc(doc.pop("preset"))
        base.update(doc)
        doc = base
    merged = dict(_DEFAULTS)
    merged.update(doc)

    if "dataset" not in merged:
        raise ConfigError("config needs a 'dataset' block "
                          "({'synthetic': {...}} or {'manifest': path})")
    ds = merged["dataset"]
    if set(ds) == {"synthetic"}:
        if not isinstance(ds["synthetic"], dict):
            raise ConfigError("config key 'dataset.synthetic' must be an object")
        _check_keys(ds["synthetic"], _SYNTHETIC_KEYS, "dataset.synthetic.")
    elif set(ds) == {"manifest"}:
        if not isinstance(ds["manifest"], str):
            raise ConfigError("config key 'dataset.manifest' must be a path string")
    else:
        raise ConfigError("'dataset' must hold exactly one of 'synthetic'/'manifest'")

    for key in ("budget", "initial_labeled", "al_batch_size"):
        if key not in merged:
            raise ConfigError(f"config key {key!r} is required")
    return merged


def make_experiment(doc: dict, model: str | None = None,
                    strategy: str | None = None) -> ExperimentConfig:
    """Build the runnable config; model/strategy arguments override the doc."""
    model = model or doc.get("model")
    strategy = strategy or doc.get("strategy")
    if not model or not strategy:
        raise ConfigError("both a model and a strategy must be given "
                          "(config keys or --models/--strategies)")
    ds = doc["dataset"]
    if "synthetic" in ds:
        s = ds["synthetic"]
        spec = SyntheticSpec(
            n_domains=s.get("domains", 3),
            n_classes=s.get("classes", 4),
            dim=s.get("dim", 20),
            samples_per_domain=s.get("samples_per_domain", 750),
            noise=s.get("noise", 1.0),
            shift_norm=s.get("shift_norm", 2.0),
            class_separation=s.get("class_separation", 3.0),
            conflict_fraction=s.get("conflict_fraction", 0.0),
            rotation=float(s.get("rotation", 0.0)),
        )
        dataset = DatasetSpec(synthetic=spec)
    else:
        dataset = DatasetSpec(manifest=ds["manifest"])
    train = TrainParams(
        optimizer=doc["optimizer"],
        learning_rate=float(doc["learning_rate"]),
        lr_decay=None if doc["lr_decay"] is None else float(doc["lr_decay"]),
        batch_size=doc["batch_size"],
        weight_decay=float(doc["weight_decay"]),
        patience=doc["patience"],
        max_epochs=doc["max_epochs"],
        val_fraction=float(doc["val_fraction"]),
    )
    config = ExperimentConfig(
        model=model,
        strategy=strategy,
        dataset=dataset,
        budget=doc["budget"],
        initial_labeled=doc["initial_labeled"],
        al_batch=doc["al_batch_size"],
        repeats=doc["repeats"],
        seed=doc["seed"],
        hidden_dim=doc["hidden_dim"],
        lam=float(doc["lambda"]),
        split=tuple(doc["split"]),
        train=train,
        dump_scores=doc["dump_scores"],
    )
    return config.validate()


def parse_config(source, model=None, strategy=None) -> ExperimentConfig:
    """One-shot load + build, for library callers."""
    return make_experiment(load_config_doc(source), model, strategy)


def snapshot_doc(doc: dict, model: str, strategy: str, seed: int) -> dict:
    """Fully resolved document that reproduces the run when fed back in."""
    snap = {k: doc[k] for k in _TOP_KEYS if k in doc and k not in ("preset", "out")}
    snap["model"] = model
    snap["strategy"] = strategy
    snap["seed"] = seed
    return snap
