#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Search bounds shared by the bounded decision procedures."""

import logging
import os
from typing import Mapping

from pydantic import BaseModel, Field, ValidationError, field_validator

logger = logging.getLogger(__name__)

ENV_PREFIX = "SFTLAB_"


class SearchBounds(BaseModel):
    """Bounds for searches that are not decided exactly."""

    depth: int = Field(default=6)
    radius: int = Field(default=6)
    word_bound: int = Field(default=12)
    max_period_steps: int = Field(default=10000)
    max_search_nodes: int = Field(default=200000)

    @field_validator(
        "depth", "radius", "word_bound", "max_period_steps", "max_search_nodes", mode="before"
    )
    @classmethod
    def non_negative(cls, v: object) -> int:
        """Accept integers or decimal strings, reject negatives."""
        if isinstance(v, str):
            v = int(v.strip())
        if not isinstance(v, int) or isinstance(v, bool):
            raise ValueError(f"expected an integer, got {v!r}")
        if v < 0:
            raise ValueError(f"bound must be non-negative, got {v}")
        return v


def load_bounds(environ: Mapping[str, str] | None = None, **overrides: int | None) -> SearchBounds:
    """Build search bounds from the environment and explicit overrides.

    Args:
        environ: Environment mapping, defaults to ``os.environ``.
        overrides: Values that take precedence over the environment; ``None`` is ignored.

    Returns:
        SearchBounds: Validated bounds. Invalid environment values fall back to defaults.
    """
    environ = os.environ if environ is None else environ
    values: dict[str, object] = {}
    for field in SearchBounds.model_fields:
        key = f"{ENV_PREFIX}{field.upper()}"
        if key not in environ:
            continue
        try:
            SearchBounds(**{field: environ[key]})
        except (ValidationError, ValueError) as e:
            logger.info(f"Ignoring incorrect {key}: {str(e)}")
            continue
        values[field] = environ[key]

    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SearchBounds(**values)  # type: ignore[arg-type]
    except ValidationError as e:
        logger.warning(f"Incorrect search bounds, using defaults: {str(e)}")
        return SearchBounds()
