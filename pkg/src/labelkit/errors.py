"""Domain exceptions shared by all labelkit modules."""

from __future__ import annotations


class LabelkitError(Exception):
    """Base class for every error raised by the platform."""


class OutOfBounds(LabelkitError):
    """Span offsets fall outside the example content."""


class EmptyAfterTrim(LabelkitError):
    """Selected slice contains only whitespace."""


class InvalidPayload(LabelkitError):
    """Annotation payload fails validation (bad offsets, unknown tag, cyclic edges, ...)."""


class MalformedDataset(LabelkitError):
    """Dataset upload failed validation; `problems` lists per-row diagnostics."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class RedundancyExceedsTeam(LabelkitError):
    """Requested redundancy M is larger than the team."""


class UnknownDataset(LabelkitError):
    pass


class UnknownExample(LabelkitError):
    pass


class UnknownSchema(LabelkitError):
    pass


class UnknownAnnotator(LabelkitError):
    pass


class UnknownTeam(LabelkitError):
    pass


class UnknownJob(LabelkitError):
    pass


class UnknownTask(LabelkitError):
    pass


class UnknownIdeal(LabelkitError):
    pass


class NotTeamMember(LabelkitError):
    """Annotator is not a member of the job's team."""


class TaskNotLeased(LabelkitError):
    """Task is not currently leased by the calling annotator."""


class InvalidRegex(LabelkitError):
    """Pattern does not compile or uses constructs outside the supported dialect."""


class DuplicateExample(LabelkitError):
    """Example id already present in the index."""


class ExampleNotInJob(LabelkitError):
    """Example does not belong to the job's dataset."""


class ConflictsWithAccepted(LabelkitError):
    """A conflicting ideal already holds an accepted judgment; reviewer must reject it first."""

    def __init__(self, ideal_id: str, accepted_ideal_ids: list[str]):
        super().__init__(
            f"ideal {ideal_id} conflicts with accepted ideal(s): {', '.join(accepted_ideal_ids)}"
        )
        self.ideal_id = ideal_id
        self.accepted_ideal_ids = accepted_ideal_ids


class WrongJobKind(LabelkitError):
    """Metric is only defined for single-label classification jobs."""


class NoGold(LabelkitError):
    """Job has no accepted ideals yet, so reviewed-gold metrics are undefined."""
