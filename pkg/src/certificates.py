#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Verdict records returned by the identity checks."""

import logging
from dataclasses import dataclass, field
from typing import Any

from errors import InconsistencyError

logger = logging.getLogger(__name__)


@dataclass
class Check:
    """One named assertion evaluated on a concrete instance."""

    name: str
    passed: bool
    detail: Any = None

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Report:
    """A named group of checks, optionally with a precondition failure."""

    name: str
    checks: list[Check] = field(default_factory=list)
    precondition_failure: str | None = None

    def add(self, name: str, passed: bool, detail: Any = None) -> Check:
        """Record a check and log failures."""
        check = Check(name, bool(passed), detail)
        self.checks.append(check)
        if not check.passed:
            logger.warning(f"{self.name}: check {name} failed: {detail}")
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        """Append all checks of another report."""
        for check in other.checks:
            self.checks.append(Check(f"{prefix}{check.name}", check.passed, check.detail))
        if other.precondition_failure and not self.precondition_failure:
            self.precondition_failure = other.precondition_failure

    @property
    def passed(self) -> bool:
        """Return True when there is a verdict and every check passed."""
        return self.precondition_failure is None and all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        """Return the failed checks."""
        return [c for c in self.checks if not c.passed]

    def raise_on_failure(self) -> "Report":
        """Raise InconsistencyError if any check failed."""
        if self.failures:
            names = ", ".join(c.name for c in self.failures)
            raise InconsistencyError(f"{self.name}: failed checks {names}")
        return self

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "name": self.name,
            "passed": self.passed,
            "precondition_failure": self.precondition_failure,
            "checks": [c.to_dict() for c in self.checks],
        }
