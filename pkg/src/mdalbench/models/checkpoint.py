"""Bit-exact model checkpoints (npz with a JSON metadata record)."""

import io
import json

import numpy as np

from mdalbench.errors import DataError
from mdalbench.models.graph import ModelGraph, build_model

FORMAT_VERSION = 1


def save_checkpoint(model: ModelGraph, path):
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "n_domains": model.n_domains,
        "n_classes": model.n_classes,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "lam": model.lam,
    }
    arrays = {"__meta__": np.frombuffer(json.dumps(meta).encode("utf-8"),
                                        dtype=np.uint8)}
    for name, layer in model.layers():
        arrays[f"{name}.w"] = layer.w
        arrays[f"{name}.b"] = layer.b
    if hasattr(path, "write"):
        np.savez(path, **arrays)
    else:
        with open(path, "wb") as fh:  # keep the exact path (savez appends .npz)
            np.savez(fh, **arrays)


def load_checkpoint(path) -> ModelGraph:
    with np.load(path) as blob:
        if "__meta__" not in blob:
            raise DataError(f"{path}: not a model checkpoint")
        meta = json.loads(bytes(blob["__meta__"]).decode("utf-8"))
        if meta.get("format_version") != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version "
                            f"{meta.get('format_version')}")
        model = build_model(meta["kind"], meta["input_dim"], meta["hidden_dim"],
                            meta["n_classes"], meta["n_domains"], meta["lam"],
                            np.random.default_rng(0))
        for name, layer in model.layers():
            layer.w[...] = blob[f"{name}.w"]
            layer.b[...] = blob[f"{name}.b"]
    return model


def dump_bytes(model: ModelGraph) -> bytes:
    buf = io.BytesIO()
    save_checkpoint(model, buf)
    return buf.getvalue()
