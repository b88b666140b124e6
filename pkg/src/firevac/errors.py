"""Shared exception types.

Error taxonomy: ContractError for violated preconditions, StateError for
illegal request-lifecycle transitions, ScenarioError for bad input files,
StoreUnavailable / RequestNotFound for replicated-store access failures,
and EscalationError for conditions the base station must resolve
(total coordination loss, infeasible fleet sizing).
"""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class StateError(RuntimeError):
    """Illegal state-machine transition (e.g. activating a non-PENDING request)."""


class ScenarioError(ValueError):
    """Input file or scenario configuration is malformed or inconsistent."""


class StoreUnavailable(RuntimeError):
    """No live replica can serve the operation."""


class RequestNotFound(KeyError):
    """No stored request matches the given request id."""


class EscalationError(RuntimeError):
    """Condition requiring base-station intervention (e.g. zero live drones)."""
