"""Exception hierarchy shared across the workbench."""


class SeevalError(Exception):
    """Base class for all workbench errors."""


# ---- audio I/O ----

class UnsupportedFormat(SeevalError):
    """WAV file is not mono PCM16 / float32."""


class CorruptHeader(SeevalError):
    """RIFF/WAVE header could not be parsed."""


# ---- signal preconditions ----

class LengthMismatch(SeevalError):
    """Two signals that must be equal length are not."""


class TooShort(SeevalError):
    """Signal too short for the requested analysis."""


class ZeroReference(SeevalError):
    """Reference signal is all-zero."""


class ZeroSignal(SeevalError):
    """Signal is all-zero where energy is required."""


class AllSilent(SeevalError):
    """No loudness block passed the absolute gate."""


# ---- score ingestion ----

class ParseError(SeevalError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class RangeViolation(SeevalError):
    """Metric value outside its declared range."""


# ---- rt60 ----

class InsufficientDecay(SeevalError):
    """Energy decay curve never reaches the lower fit bound."""


class TooFew(SeevalError):
    """Not enough estimates to summarize."""


# ---- mixture generation ----

class CatalogTooSmall(SeevalError):
    """RIR catalog cannot supply the requested speaker positions."""


class InsufficientMaterial(SeevalError):
    """Utterance pool too short to fill an activity pattern."""


class SilentComponent(SeevalError):
    """Speech or noise component has zero power where gain is solved."""


class PatternUnavailable(SeevalError):
    """No activity pattern with the sampled speaker count."""


# ---- statistics ----

class EmptyVotes(SeevalError):
    """MOS requested over an empty vote list."""


class DegenerateInput(SeevalError):
    """Correlation input has zero variance or too few points."""


class MissingMetric(SeevalError):
    """A requested metric column is absent."""


class IncompleteMatrix(SeevalError):
    """Vote matrix has missing cells."""


class DegenerateVariance(SeevalError):
    """ANOVA error variance is zero."""


# ---- campaign ----

class MissingOutput(SeevalError):
    def __init__(self, system_id, sample_ids):
        super().__init__(
            f"system '{system_id}' is missing outputs for: {', '.join(sample_ids)}"
        )
        self.system_id = system_id
        self.sample_ids = list(sample_ids)


class EmptyTable(SeevalError):
    """Score table has no rows."""


# ---- listening-test service ----

class ValidationError(SeevalError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class NotEnrolled(SeevalError):
    """Unknown participant token."""


class AlreadyPlayed(SeevalError):
    """Presentation audio was already consumed."""


class OutOfOrder(SeevalError):
    """Request targets a presentation other than the current one."""


class NotPlayedYet(SeevalError):
    """Vote submitted before playback."""


class DuplicateVote(SeevalError):
    """Vote already recorded for this presentation."""


class InvalidVote(SeevalError):
    """Vote outside the 1..5 Likert range."""


class OutOfRange(SeevalError):
    """Level offset outside [-6, +6] dB."""
