"""Token-level attribution and LLM-backed narration.

For a linear model over fixed features, the class-centered weight * value
product is an exact per-feature attribution: contributions sum to the centered
target logit. Bigram mass is split equally between its two tokens. The LLM is
used only to phrase the result; it never changes the prediction, and every
failure degrades to a deterministic template.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import requests

from .corpus import LabeledPost, clean_text
from .features import TfidfModel
from .labels import CLASS_LABELS, ClassLabel
from .models import KIND_LOGREG, LinearClassifier, UnsupportedModelOperation

log = logging.getLogger(__name__)

DISCLAIMER = "This is not a clinical diagnosis."
DEFAULT_HIGHLIGHT_K = 5
DEFAULT_REPLY_PATH = "choices.0.message.content"

NARRATION_PROMPT = (
    "A screening model flagged the following post as {label} with confidence "
    "{confidence}. The most influential terms were: {terms}. In 2-3 sentences, "
    "explain in plain language why the model may have flagged it. Do not "
    "diagnose. Post: {text}"
)

ZERO_SHOT_PROMPT = (
    "Classify the following social media post into exactly one of these "
    "categories: {label_list}. Reply with the category name only. Post: {text}"
)


@dataclass
class TokenAttribution:
    token: str
    occurrences: tuple[int, ...]  # word positions in clean_text
    contribution: float


def attribute(
    m: LinearClassifier,
    v: TfidfModel,
    post: LabeledPost,
    target: ClassLabel,
) -> list[TokenAttribution]:
    """Exact per-token contributions toward the target class.

    feature contribution_j = (w_target_j - mean_c w_c_j) * x_j; a bigram's
    contribution is split 50/50 between its tokens. Tokens outside the
    vocabulary contribute exactly 0.
    """
    if m.kind != KIND_LOGREG:
        raise UnsupportedModelOperation(f"attribution requires {KIND_LOGREG}, got {m.kind}")
    t_idx = m.classes.index(target)
    centered = m.weights[t_idx] - m.weights.mean(axis=0)

    x = v.transform(post.clean_text)
    tokens = post.clean_text.split()
    token_contrib: dict[str, float] = {}
    order: list[str] = []
    positions: dict[str, list[int]] = {}
    for pos, tok in enumerate(tokens):
        if tok not in token_contrib:
            token_contrib[tok] = 0.0
            order.append(tok)
            positions[tok] = []
        positions[tok].append(pos)

    for idx, val in x:
        if idx >= len(centered):
            continue
        contrib = float(centered[idx]) * val
        parts = v.term(idx).split()
        if len(parts) == 1:
            token_contrib[parts[0]] += contrib
        else:
            token_contrib[parts[0]] += contrib / 2.0
            token_contrib[parts[1]] += contrib / 2.0

    return [
        TokenAttribution(token=t, occurrences=tuple(positions[t]), contribution=token_contrib[t])
        for t in order
    ]


def centered_logit(m: LinearClassifier, x, target: ClassLabel) -> float:
    """Feature part of the target logit minus the class mean (bias excluded)."""
    t_idx = m.classes.index(target)
    centered = m.weights[t_idx] - m.weights.mean(axis=0)
    return float(sum(centered[idx] * val for idx, val in x if idx < len(centered)))


def highlight(attrs: Sequence[TokenAttribution], k: int = DEFAULT_HIGHLIGHT_K) -> list[TokenAttribution]:
    """The k tokens with the largest positive contribution, strongest first."""
    if k < 1:
        raise ValueError("k must be at least 1")
    positive = [a for a in attrs if a.contribution > 0]
    positive.sort(key=lambda a: (-a.contribution, a.token))
    return positive[:k]


class LlmTransportError(RuntimeError):
    """Network failure, timeout, or malformed reply from the LLM endpoint."""


@dataclass
class LlmClient:
    """Minimal JSON-over-HTTP chat-completion client.

    A disabled client never performs network activity. The reply is read from
    a dotted path into the response JSON (list indices allowed).
    """

    endpoint: str = ""
    model_name: str = ""
    timeout: float = 10.0
    enabled: bool = False
    api_key: Optional[str] = None
    reply_path: str = DEFAULT_REPLY_PATH
    max_in_flight: int = 4
    _gate: threading.Semaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._gate = threading.Semaphore(self.max_in_flight)

    def chat(self, prompt: str) -> str:
        if not self.enabled:
            raise LlmTransportError("LLM client is disabled")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"model": self.model_name, "messages": [{"role": "user", "content": prompt}]}
        with self._gate:
            try:
                resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                payload = resp.json()
            except requests.RequestException as e:
                raise LlmTransportError(f"LLM request failed: {e}") from e
            except ValueError as e:
                raise LlmTransportError(f"LLM reply is not JSON: {e}") from e
        return _extract_reply(payload, self.reply_path)


def _extract_reply(payload, path: str) -> str:
    node = payload
    for part in path.split("."):
        try:
            node = node[int(part)] if part.isdigit() else node[part]
        except (KeyError, IndexError, TypeError):
            raise LlmTransportError(f"reply path {path!r} missing at {part!r}") from None
    if not isinstance(node, str):
        raise LlmTransportError(f"reply path {path!r} did not resolve to a string")
    return node


def _fallback_narrative(predicted: ClassLabel, confidence: float, terms: Sequence[str]) -> str:
    shown = ", ".join(terms) if terms else "none"
    return f"Flagged as {predicted.value} (confidence {confidence:.3f}). Most influential terms: {shown}."


def narrate(
    client: LlmClient,
    post: LabeledPost,
    predicted: ClassLabel,
    confidence: float,
    highlights: Sequence[TokenAttribution],
) -> tuple[str, str]:
    """Return (narrative, source); source is 'llm' or 'template_fallback'.

    Never raises toward the caller: any transport problem falls back to the
    deterministic template and is logged.
    """
    terms = [h.token for h in highlights]
    if not client.enabled:
        return _fallback_narrative(predicted, confidence, terms), "template_fallback"
    prompt = NARRATION_PROMPT.format(
        label=predicted.value,
        confidence=f"{confidence:.3f}",
        terms=", ".join(terms) if terms else "none",
        text=post.clean_text,
    )
    try:
        return client.chat(prompt), "llm"
    except LlmTransportError as e:
        log.warning("narration fell back to template: %s", e)
        return _fallback_narrative(predicted, confidence, terms), "template_fallback"


def load_alias_table() -> dict[ClassLabel, list[str]]:
    text = resources.files("smscreen.data").joinpath("label_aliases.json").read_text(encoding="utf-8")
    raw = json.loads(text)
    return {ClassLabel(label): list(aliases) for label, aliases in raw.items()}


_ALIASES: Optional[dict[ClassLabel, list[str]]] = None


def _aliases() -> dict[ClassLabel, list[str]]:
    global _ALIASES
    if _ALIASES is None:
        _ALIASES = load_alias_table()
    return _ALIASES


def _contains_phrase(tokens: list[str], phrase: str) -> bool:
    words = phrase.split()
    if not words or len(words) > len(tokens):
        return False
    return any(tokens[i:i + len(words)] == words for i in range(len(tokens) - len(words) + 1))


def map_llm_output(
    reply: str,
    labels: Sequence[ClassLabel] = CLASS_LABELS,
) -> Optional[ClassLabel]:
    """Map a free-text reply onto the closed label set, or None if unmapped.

    Normalize, then in order: exact label-name match; unique alias phrase
    containment; unique label-name phrase containment. Zero or multiple
    candidates at a stage means unmapped.
    """
    normalized = clean_text(reply)
    if not normalized:
        return None
    tokens = normalized.split()

    name_of = {label: label.value.replace("_", " ") for label in labels}
    for label, name in name_of.items():
        if normalized == name:
            return label

    alias_table = _aliases()
    alias_hits = [
        label
        for label in labels
        if any(_contains_phrase(tokens, clean_text(a)) for a in alias_table.get(label, ()))
    ]
    if len(alias_hits) == 1:
        return alias_hits[0]
    if len(alias_hits) > 1:
        return None

    name_hits = [label for label, name in name_of.items() if _contains_phrase(tokens, name)]
    if len(name_hits) == 1:
        return name_hits[0]
    return None


@dataclass
class ZeroShotResult:
    label: Optional[ClassLabel]
    raw_reply: str

    @property
    def mapped(self) -> bool:
        return self.label is not None


def zero_shot_classify(client: LlmClient, text: str) -> ZeroShotResult:
    """Ask the LLM for one of the 10 categories; unmapped replies are preserved."""
    if not client.enabled:
        raise LlmTransportError("zero-shot classification requires an enabled LLM client")
    prompt = ZERO_SHOT_PROMPT.format(
        label_list=", ".join(c.value for c in CLASS_LABELS),
        text=clean_text(text),
    )
    reply = client.chat(prompt)
    return ZeroShotResult(label=map_llm_output(reply), raw_reply=reply)


@dataclass
class Explanation:
    predicted: ClassLabel
    confidence: float
    attributions: list[TokenAttribution]
    highlights: list[TokenAttribution]
    narrative: str
    narrative_source: str
    disclaimer: str = DISCLAIMER


def explain_post(
    m: LinearClassifier,
    v: TfidfModel,
    post: LabeledPost,
    client: Optional[LlmClient] = None,
    k: int = DEFAULT_HIGHLIGHT_K,
) -> Explanation:
    """Classify and explain one post end to end."""
    probs = m.predict_proba(v.transform(post.clean_text))
    predicted = m.classes[int(probs.argmax())]
    confidence = float(probs.max())
    attrs = attribute(m, v, post, predicted)
    tops = highlight(attrs, k)
    narrative, source = narrate(client or LlmClient(), post, predicted, confidence, tops)
    return Explanation(
        predicted=predicted,
        confidence=confidence,
        attributions=attrs,
        highlights=tops,
        narrative=narrative,
        narrative_source=source,
    )
