"""Exception hierarchy shared by every module."""

from __future__ import annotations


class EvconjError(Exception):
    """Base class for all library errors."""


class GraphError(EvconjError):
    """A graph is structurally malformed."""


class SinkError(GraphError):
    """An operation that requires a graph without sinks received one with sinks."""

    def __init__(self, sinks, what="graph"):
        self.sinks = tuple(sinks)
        super().__init__(f"{what} has sinks: {', '.join(self.sinks)}")


class BoundExceeded(EvconjError):
    """A bounded search would exceed its configured size limit."""


class MatrixError(EvconjError):
    """Matrix shapes or entries are invalid for the requested operation."""


class SplitError(EvconjError):
    """A partition or split description is invalid."""


class BlockMapError(EvconjError):
    """A block map table is incomplete, ill-typed or incompatible."""


class InternalConsistencyError(EvconjError):
    """A construction produced an object that fails its own invariants."""
