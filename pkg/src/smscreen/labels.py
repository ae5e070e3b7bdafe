"""The closed set of screening categories and label parsing."""

from __future__ import annotations

import enum


class UnknownLabelError(ValueError):
    """Raised when a string does not parse to any known class label."""


class ClassLabel(str, enum.Enum):
    AGE_CB = "age_cb"
    ANXIETY = "anxiety"
    BIPOLAR = "bipolar"
    ETHNICITY_CB = "ethnicity_cb"
    GENDER_CB = "gender_cb"
    NON_SUICIDE = "non_suicide"
    PERSONALITY_DISORDER = "personality_disorder"
    RELIGION_CB = "religion_cb"
    STRESS = "stress"
    SUICIDE = "suicide"

    def __str__(self) -> str:
        return self.value

    @property
    def display_name(self) -> str:
        """Human-readable form, e.g. 'Age CB', 'Personality Disorder'."""
        words = self.value.split("_")
        return " ".join("CB" if w == "cb" else w.capitalize() for w in words)


# Fixed alphabetical order; used for class ordering in matrices and artifacts.
CLASS_LABELS: tuple[ClassLabel, ...] = tuple(sorted(ClassLabel, key=lambda c: c.value))

_CANONICAL = {label.value: label for label in ClassLabel}


def normalize_label_text(s: str) -> str:
    """Lowercase and unify separators so 'Personality Disorder' == 'personality_disorder'."""
    s = s.strip().lower().replace("-", " ").replace("_", " ")
    return "_".join(s.split())


def parse_label(s: str) -> ClassLabel:
    """Parse a label string, case-insensitively, spaces/underscores interchangeable.

    Raises UnknownLabelError for anything outside the closed set.
    """
    key = normalize_label_text(s)
    try:
        return _CANONICAL[key]
    except KeyError:
        raise UnknownLabelError(f"unknown class label: {s!r}") from None
