"""Exception hierarchy shared by all scriptsmith modules."""

from __future__ import annotations


class ScriptsmithError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ScriptsmithError):
    """Configuration file or value is invalid."""


class InvalidInput(ScriptsmithError):
    """A caller violated an operation precondition."""


# --- gateway ---------------------------------------------------------------

class UnknownTemplate(ScriptsmithError):
    """Requested prompt template id is not registered."""


class MissingBinding(ScriptsmithError):
    """A template placeholder has no value in the bindings map."""

    def __init__(self, name: str):
        super().__init__(f"missing binding for placeholder '{name}'")
        self.name = name


class BackendUnreachable(ScriptsmithError):
    """HTTP backend could not be reached or returned a transport error."""


class FixtureMiss(ScriptsmithError):
    """Scripted backend in strict mode has no entry for the prompt."""


class TokenLimitExceeded(ScriptsmithError):
    """Backend reported the request exceeded its token budget."""


# --- generation ------------------------------------------------------------

class EmptyCompletion(ScriptsmithError):
    """Generator returned an empty completion where a script was required."""


class NoScriptContent(ScriptsmithError):
    """Raw completion contains only whitespace; nothing to extract."""


# --- assessment ------------------------------------------------------------

class ExternalCheckerUnavailable(ScriptsmithError):
    """An external syntax checker is configured but cannot be run."""


# --- refinement ------------------------------------------------------------

class GuardrailNoError(ScriptsmithError):
    """The refiner declined to invent a defect for a script it considers fine."""


# --- catalogue -------------------------------------------------------------

class EmptyText(ScriptsmithError):
    """Text to embed is empty after normalization."""


class ExternalEmbedderUnavailable(ScriptsmithError):
    """A remote embedding provider is configured but cannot be reached."""


class SyntaxRejected(ScriptsmithError):
    """A script failed the syntax gate guarding the catalogue or a review edit."""

    def __init__(self, message: str, findings=()):
        super().__init__(message)
        self.findings = tuple(findings)


class DuplicateStatement(ScriptsmithError):
    """Catalogue already holds this statement with a different script."""


# --- pipeline --------------------------------------------------------------

class UnknownOutcome(ScriptsmithError):
    """No pipeline outcome exists with the given id."""


class AlreadyDecided(ScriptsmithError):
    """A review decision was already recorded for this outcome."""


# --- eval harness ----------------------------------------------------------

class ParseError(ScriptsmithError):
    """A dataset line could not be parsed or violates the label domain."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(ScriptsmithError):
    """Two dataset records share an id."""


class MissingLabels(ScriptsmithError):
    """A label-derived metric was requested but no record carries the labels."""
