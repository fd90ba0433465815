"""Runtime configuration: cost weights, catalogue size, guards.

Loaded from a JSON file named by ``--config`` or the GOPT_CONFIG
environment variable; CLI flags override file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

from .errors import GoptError


@dataclass
class Config:
    alpha_expand: float = 1.0
    alpha_join: float = 1.0
    glogue_k: int = 3
    workers: int = 1
    max_pattern_vertices: int = 6
    wall_clock_seconds: float | None = None


def load_config(path: str | None = None) -> Config:
    if path is None:
        path = os.environ.get("GOPT_CONFIG")
    cfg = Config()
    if not path:
        return cfg
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise GoptError(f"cannot read config {path}: {e}") from e
    known = {f.name for f in fields(Config)}
    for key, value in doc.items():
        if key not in known:
            raise GoptError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg
