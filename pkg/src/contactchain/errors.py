"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ContactChainError(Exception):
    """Base class for all package errors."""


class EmptyPlan(ContactChainError):
    """No step could be recovered from plan text."""


class SchemaError(ContactChainError):
    """A ScenePlan or asset document does not match the expected layout."""


class DanglingObjectRef(SchemaError):
    """A chain references an object that is not declared in ``obj``."""


class UnknownObject(ContactChainError):
    pass


class UnknownPart(ContactChainError):
    pass


class EmptyCloud(ContactChainError):
    pass


class EmptyBatch(ContactChainError):
    pass


class NoEligiblePairs(ContactChainError):
    """Every measured pair was ``not care``, so the contact error is undefined."""


class MismatchedIds(ContactChainError):
    pass


class PlannerError(ContactChainError):
    """Base class for failures while obtaining a plan from the language model."""


class AuthMissing(PlannerError):
    pass


class PlannerTimeout(PlannerError):
    pass


class ServiceError(PlannerError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"planner service returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class TranscriptMiss(PlannerError):
    pass
