"""Embedding files, flat key=value configs, and CSV emitters.

All numeric JSON payloads round-trip exactly: floats are serialized with
Python's shortest-repr decimals (up to 17 significant digits).
"""

from __future__ import annotations

import json
from pathlib import Path
import numpy as np

from .manifold import check_point, parse_manifold
from .optim import Embedding, ShiftConstants, TrainConfig, TrainHistory

FORMAT_VERSION = 1


def embedding_to_json(emb: Embedding) -> str:
    shift = None
    if emb.shift_constants is not None:
        s = emb.shift_constants
        shift = {
            "min_forman": s.min_forman,
            "delta_hat": s.delta_hat,
            "lambda": s.lam,
            "r_h": s.r_h,
        }
    payload = {
        "format_version": FORMAT_VERSION,
        "manifold": emb.spec.to_string(),
        "shift_constants": shift,
        "config_digest": emb.config_digest,
        "seed": emb.seed,
        "epochs": emb.epochs,
        "nodes": [
            {"id": i, "blocks": [b[i].tolist() for b in emb.blocks]}
            for i in range(emb.n)
        ],
    }
    return json.dumps(payload, indent=1) + "\n"


def write_embedding(emb: Embedding, path: str | Path) -> None:
    Path(path).write_text(embedding_to_json(emb), encoding="utf-8")


def embedding_from_json(text: str) -> Embedding:
    payload = json.loads(text)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported embedding format version {payload.get('format_version')}")
    spec = parse_manifold(payload["manifold"])
    nodes = payload["nodes"]
    if not nodes:
        raise ValueError("embedding has no nodes")
    blocks = [
        np.array([node["blocks"][k] for node in nodes], dtype=np.float64)
        for k in range(len(spec.factors))
    ]
    check_point(spec, blocks)
    shift = None
    if payload.get("shift_constants") is not None:
        s = payload["shift_constants"]
        shift = ShiftConstants(
            min_forman=float(s["min_forman"]),
            delta_hat=float(s["delta_hat"]),
            lam=float(s["lambda"]),
            r_h=float(s["r_h"]),
        )
    return Embedding(
        spec=spec,
        blocks=blocks,
        shift_constants=shift,
        seed=int(payload.get("seed", 0)),
        epochs=int(payload.get("epochs", 0)),
        config_digest=str(payload.get("config_digest", "")),
    )


def read_embedding(path: str | Path) -> Embedding:
    return embedding_from_json(Path(path).read_text(encoding="utf-8"))


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {line_no}: expected key=value, got {line!r}")
        key, val = stripped.split("=", 1)
        values[key.strip()] = val.strip()
    return values


_FLOAT_KEYS = ("tau", "epsilon", "gamma", "ell_plus", "delta", "lambda_rot", "learning_rate")
_INT_KEYS = ("epochs", "seed")


def config_from_mapping(values: dict[str, str], base: TrainConfig | None = None) -> TrainConfig:
    cfg = base if base is not None else TrainConfig()
    known = set(_FLOAT_KEYS) | set(_INT_KEYS) | {"batch_pairs", "radial_init", "curvature_residuals"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key in _FLOAT_KEYS:
        if key in values:
            kwargs[key] = float(values[key])
    for key in _INT_KEYS:
        if key in values:
            kwargs[key] = int(values[key])
    if "batch_pairs" in values:
        raw = values["batch_pairs"]
        kwargs["batch_pairs"] = raw if raw in ("all", "auto") else int(raw)
    if "radial_init" in values:
        raw = values["radial_init"]
        if raw == "auto":
            kwargs["radial_init"] = "auto"
        else:
            lo, hi = raw.split(",")
            kwargs["radial_init"] = (float(lo), float(hi))
    if "curvature_residuals" in values:
        kwargs["curvature_residuals"] = values["curvature_residuals"]
    from dataclasses import replace

    cfg = replace(cfg, **kwargs)
    cfg.validate()
    return cfg


def load_config(path: str | Path, base: TrainConfig | None = None) -> TrainConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")), base)


def write_history_csv(history: TrainHistory, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write("epoch,loss_d,loss_c,wall_ms\n")
        for e, ld, lc, ms in zip(history.epochs, history.loss_d, history.loss_c, history.wall_ms):
            out.write(f"{e},{ld!r},{lc!r},{ms:.3f}\n")


def write_stats_csv(stats: list, path: str | Path) -> None:
    """One row per run plus a 'mean' summary row."""
    cols = ("degree_mean", "degree_var", "clustering_mean", "clustering_var",
            "max_clique_size", "clique_exact")
    with open(path, "w", encoding="utf-8") as out:
        out.write("run," + ",".join(cols) + "\n")
        for k, s in enumerate(stats):
            vals = [getattr(s, c) for c in cols]
            out.write(f"{k}," + ",".join(_cell(v) for v in vals) + "\n")
        means = [float(np.mean([getattr(s, c) for s in stats])) for c in cols[:-1]]
        exact_all = all(s.clique_exact for s in stats)
        out.write("mean," + ",".join(_cell(v) for v in means) + f",{_cell(exact_all)}\n")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_barycenter_csv(histogram: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write("degree,mass\n")
        for d, m in enumerate(histogram):
            if m > 0:
                out.write(f"{d},{m!r}\n")


def write_volume_csv(graph_norm: np.ndarray, vol_norm: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write("node,graph_ball_norm,manifold_volume_norm\n")
        for i, (a, b) in enumerate(zip(graph_norm, vol_norm)):
            out.write(f"{i},{float(a)!r},{float(b)!r}\n")
