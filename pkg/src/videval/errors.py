"""Exception types shared across the harness."""


class HarnessError(Exception):
    """Base class for all harness-specific errors."""


# --- media ---------------------------------------------------------------

class UnsupportedFormat(HarnessError):
    """File extension/container is outside the supported video and audio lists."""


class ProbeFailure(HarnessError):
    """The external media tool failed or produced unreadable output."""


class NotAVideo(HarnessError):
    """Operation requires a video asset."""


class InvalidOverlap(HarnessError):
    """Split overlap must be smaller than the segment length."""


# --- providers -----------------------------------------------------------

class ProviderUnavailable(HarnessError):
    """Provider is unknown, unreachable, or misconfigured."""


class ReplayMiss(HarnessError):
    """No cassette entry exists for the request in replay mode."""


class MalformedProviderOutput(HarnessError):
    """Provider returned a payload that violates its declared schema."""


# --- parsing -------------------------------------------------------------

class BadTimestamp(HarnessError):
    """Timestamp text is not a valid MM:SS or HH:MM:SS value."""


class NoAnswerFound(HarnessError):
    """No option letter could be extracted from the response text."""


# --- benchmark -----------------------------------------------------------

class SchemaError(HarnessError):
    """Dataset record violates the benchmark item schema."""


class TemplateError(HarnessError):
    """Prompt template is missing a required placeholder."""


# --- scoring -------------------------------------------------------------

class EmptyVector(HarnessError):
    """Match vector has no entries; the mean is undefined."""


class NoRecords(HarnessError):
    """Accuracy requested over an empty record set."""


class MissingCondition(HarnessError):
    """Delta columns need records from both transcript conditions."""


# --- knowledge graph -----------------------------------------------------

class NoValidOutputs(HarnessError):
    """Graph construction needs at least one valid model output."""


class DuplicateModelName(HarnessError):
    """Two model outputs map to the same node identifier."""


class NegativeWeight(HarnessError):
    """Shortest paths require non-negative edge weights."""


class UnknownSource(HarnessError):
    """Shortest-path source node is not in the graph."""


class UnknownCenter(HarnessError):
    """Metrics center node is not in the graph."""


class IoError(HarnessError):
    """Failed to write an export document."""


# --- config / cli --------------------------------------------------------

class ConfigError(HarnessError):
    """Harness configuration is missing, malformed, or references absent files."""
