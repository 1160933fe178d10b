#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Exceptions raised by sftlab.

Every failure a caller can act on derives from :class:`Error`; anything else escaping
a public function is a bug.
"""

from typing import Any


class Error(Exception):
    """Base class of all errors raised by sftlab."""

    def __init__(self, message: str = "", *args: object):
        super().__init__(message, *args)
        self.message = message

    def __repr__(self) -> str:
        """Represent the Error class."""
        return f"<{type(self).__module__}.{type(self).__name__} {self.args}>"

    @property
    def name(self) -> str:
        """Return a string representation of the model plus class."""
        return f"<{type(self).__module__}.{type(self).__name__}>"


class MalformedElementError(Error):
    """Raised when a group element or word literal is not valid for the group."""


class UnsupportedGroupError(Error):
    """Raised when an operation is only defined for a different group."""


class InsufficientWindowError(Error):
    """Raised when a finite window is too small to decide the question asked."""


class NotAPermutationError(Error):
    """Raised when generator images do not form a bijection of the state set."""


class NonCommutingActionError(Error):
    """Raised when lattice generators act by non-commuting permutations."""


class MetricError(Error):
    """Raised when a distance table is not a metric on the state set."""


class NotACoverError(Error):
    """Raised when blocks are empty or fail to cover the state set."""


class RefinementError(Error):
    """Raised when a strict refinement was requested and does not hold."""


class NoMetricError(Error):
    """Raised when a metric quantity is requested from an unmetrized system."""


class PartitionRequiredError(Error):
    """Raised when an operation needs a partition and got an overlapping cover."""


class AmbiguityError(Error):
    """Raised when a set of picks does not determine a single point."""

    def __init__(self, message: str, survivors: list[str]):
        super().__init__(message)
        self.survivors = survivors


class PrecisionError(Error):
    """Raised when a search depth is too shallow for the requested accuracy."""

    def __init__(self, message: str, required_depth: int):
        super().__init__(message)
        self.required_depth = required_depth


class NotApplicableError(Error):
    """Raised when a tracing step has no witness for the given pseudo-orbit."""

    def __init__(self, message: str, counterexample: Any = None):
        super().__init__(message)
        self.counterexample = counterexample


class MalformedFactorError(Error):
    """Raised when a factor map is not surjective or not equivariant."""


class EmptySetError(Error):
    """Raised when a subshift or thread set turns out to be empty."""


class InconsistencyError(Error):
    """Raised when a checked identity fails on a concrete instance."""


class SearchLimitError(Error):
    """Raised when a bounded search exceeds its configured budget."""


class WorkspaceError(Error):
    """Raised when a workspace file cannot be turned into objects."""

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class MalformedPresentationError(Error):
    """Raised when a subshift presentation is inconsistent."""
