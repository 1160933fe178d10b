#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Utility helper functions."""

import enum
import hashlib
import json
from typing import Any

import numpy as np


def plain(data: Any) -> Any:
    """Return data with JSON types only: sets sorted, keys as strings, records as dicts."""
    if hasattr(data, "to_dict"):
        return plain(data.to_dict())
    if isinstance(data, enum.Enum):
        return data.value
    if isinstance(data, dict):
        return {_key(k): plain(v) for k, v in data.items()}
    if isinstance(data, (set, frozenset)):
        return sorted((plain(v) for v in data), key=repr)
    if isinstance(data, (list, tuple)):
        return [plain(v) for v in data]
    if isinstance(data, np.generic):
        return data.item()
    if isinstance(data, np.ndarray):
        return data.tolist()
    return data


def _key(k: Any) -> str:
    if isinstance(k, str):
        return k
    if isinstance(k, tuple):
        return "|".join(str(v) for v in k)
    return str(k)


def canonical_json(data: Any) -> str:
    """Serialize data deterministically."""
    return json.dumps(plain(data), sort_keys=True, indent=2, ensure_ascii=False, default=str)


def instance_digest(*parts: str) -> str:
    """Return a short stable digest identifying a problem instance."""
    h = hashlib.shake_256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest(8)
