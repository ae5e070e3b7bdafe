"""Split-then-balance data preparation.

The training pool is balanced (per-class downsampling, then augmentation-based
oversampling with duplicate dropping); the held-out test pool is never touched
and keeps the natural class distribution.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import config as kvconfig
from .corpus import Corpus, LabeledPost, clean_text, content_id
from .labels import CLASS_LABELS, ClassLabel, parse_label

log = logging.getLogger(__name__)

DEFAULT_CAP = 2400
DEFAULT_TARGET = 2400
DEFAULT_EDA_ALPHA = 0.1

# Attempt budget per class before accepting a shortfall: augmentation can
# stall on duplicate collisions when the source pool is tiny.
RETRY_FACTOR = 20


def _derive_seed(seed: int, *parts: str) -> int:
    """Stable per-class (and per-stage) seed so classes are order-independent."""
    material = ":".join([str(seed), *parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


class EdaOp(str, enum.Enum):
    SYNONYM_REPLACEMENT = "synonym_replacement"
    RANDOM_INSERTION = "random_insertion"
    RANDOM_SWAP = "random_swap"
    RANDOM_DELETION = "random_deletion"


class SynonymLexicon:
    """word -> synonyms map backing the augmentation ops."""

    def __init__(self, entries: dict[str, list[str]]):
        for word, syns in entries.items():
            if not syns:
                raise ValueError(f"lexicon word {word!r} maps to an empty synonym list")
            if syns == [word]:
                raise ValueError(f"lexicon word {word!r} is its own sole synonym")
        self._entries = {w: list(s) for w, s in entries.items()}

    def get(self, word: str) -> Optional[list[str]]:
        return self._entries.get(word)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    @classmethod
    def from_file(cls, path: str | Path) -> "SynonymLexicon":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> "SynonymLexicon":
        text = resources.files("smscreen.data").joinpath("synonyms.json").read_text(encoding="utf-8")
        return cls(json.loads(text))


def load_stopwords() -> frozenset[str]:
    text = resources.files("smscreen.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w for w in text.split() if w)


STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class SplitArtifacts:
    train_pool: Corpus
    test_pool: Corpus
    ratio: float
    seed: int


@dataclass
class BalancePlan:
    """Per-class downsample caps and oversampling targets."""

    caps: dict[ClassLabel, int] = field(default_factory=lambda: {c: DEFAULT_CAP for c in CLASS_LABELS})
    targets: dict[ClassLabel, int] = field(default_factory=lambda: {c: DEFAULT_TARGET for c in CLASS_LABELS})
    eda_alpha: float = DEFAULT_EDA_ALPHA
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.eda_alpha < 1:
            raise ValueError(f"eda_alpha must be in (0,1), got {self.eda_alpha}")
        for label, cap in self.caps.items():
            if cap <= 0:
                raise ValueError(f"cap for {label} must be positive")
            target = self.targets.get(label, cap)
            if cap > target:
                raise ValueError(f"cap {cap} exceeds target {target} for {label}")

    def cap(self, label: ClassLabel) -> int:
        return self.caps.get(label, DEFAULT_CAP)

    def target(self, label: ClassLabel) -> int:
        return self.targets.get(label, DEFAULT_TARGET)

    def save(self, path: str | Path) -> None:
        values: dict[str, str] = {
            "seed": str(self.seed),
            "eda_alpha": str(self.eda_alpha),
        }
        for label in CLASS_LABELS:
            values[f"cap.{label.value}"] = str(self.cap(label))
            values[f"target.{label.value}"] = str(self.target(label))
        kvconfig.dump_kv(values, path, header="Balance plan: per-class downsample caps and oversampling targets")

    @classmethod
    def load(cls, path: str | Path) -> "BalancePlan":
        values = kvconfig.load_kv(path)
        caps: dict[ClassLabel, int] = {}
        targets: dict[ClassLabel, int] = {}
        for key, value in values.items():
            if key.startswith("cap."):
                caps[parse_label(key[4:])] = int(value)
            elif key.startswith("target."):
                targets[parse_label(key[7:])] = int(value)
        plan = cls(
            caps=caps or {c: DEFAULT_CAP for c in CLASS_LABELS},
            targets=targets or {c: DEFAULT_TARGET for c in CLASS_LABELS},
            eda_alpha=float(values.get("eda_alpha", DEFAULT_EDA_ALPHA)),
            seed=int(values.get("seed", 0)),
        )
        return plan


def stratified_split(c: Corpus, ratio: float, seed: int) -> SplitArtifacts:
    """Split per class so both pools keep the input class distribution.

    Deterministic for fixed (corpus, ratio, seed); shuffling is per-class with
    a seed derived from (seed, class). Every class keeps at least one post on
    each side.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0,1), got {ratio}")
    for label, count in c.class_counts.items():
        if count < 2:
            raise ValueError(f"class {label} has {count} post(s); need at least 2 to split")

    train_ids: set[str] = set()
    for label in c.classes():
        members = [p.id for p in c.by_class(label)]
        rng = random.Random(_derive_seed(seed, "split", label.value))
        rng.shuffle(members)
        n = len(members)
        n_train = min(max(_round_half_up(ratio * n), 1), n - 1)
        train_ids.update(members[:n_train])

    train = [p for p in c if p.id in train_ids]
    test = [p for p in c if p.id not in train_ids]
    return SplitArtifacts(train_pool=Corpus(train), test_pool=Corpus(test), ratio=ratio, seed=seed)


def downsample(c: Corpus, plan: BalancePlan) -> Corpus:
    """Reduce each class to at most its cap via seeded sampling without replacement."""
    keep_ids: set[str] = set()
    for label in c.classes():
        members = [p.id for p in c.by_class(label)]
        cap = plan.cap(label)
        if len(members) <= cap:
            keep_ids.update(members)
        else:
            rng = random.Random(_derive_seed(plan.seed, "downsample", label.value))
            keep_ids.update(rng.sample(members, cap))
    return Corpus([p for p in c if p.id in keep_ids])


def eda_augment(
    p: LabeledPost,
    op: EdaOp,
    alpha: float,
    lex: SynonymLexicon,
    seed: int,
) -> LabeledPost:
    """Produce one augmented variant of a post; the label is preserved.

    n = max(1, round(alpha * word_count)) words are affected for replacement,
    insertion, and swap; deletion drops each word independently with
    probability alpha (keeping one random word if all would go). Words with no
    lexicon entry fall back to a random swap. Output text is re-normalized.
    """
    words = p.clean_text.split()
    if not words:
        raise ValueError("cannot augment a post with empty clean_text")
    if op in (EdaOp.SYNONYM_REPLACEMENT, EdaOp.RANDOM_INSERTION) and len(lex) == 0:
        raise ValueError(f"{op.value} requires a non-empty synonym lexicon")

    rng = random.Random(seed)
    n = max(1, _round_half_up(alpha * len(words)))

    def random_swap_once(ws: list[str]) -> None:
        if len(ws) >= 2:
            i, j = rng.sample(range(len(ws)), 2)
            ws[i], ws[j] = ws[j], ws[i]

    if op is EdaOp.SYNONYM_REPLACEMENT:
        candidates = [i for i, w in enumerate(words) if w not in STOPWORDS]
        if not candidates:
            candidates = list(range(len(words)))
        rng.shuffle(candidates)
        for idx in candidates[:n]:
            syns = lex.get(words[idx])
            if syns:
                words[idx] = rng.choice(syns)
            else:
                random_swap_once(words)
    elif op is EdaOp.RANDOM_INSERTION:
        for _ in range(n):
            word = rng.choice(words)
            syns = lex.get(word)
            if syns:
                words.insert(rng.randint(0, len(words)), rng.choice(syns))
            else:
                random_swap_once(words)
    elif op is EdaOp.RANDOM_SWAP:
        for _ in range(n):
            random_swap_once(words)
    elif op is EdaOp.RANDOM_DELETION:
        kept = [w for w in words if rng.random() > alpha]
        words = kept if kept else [rng.choice(words)]

    new_clean = clean_text(" ".join(words))
    return LabeledPost(
        id=content_id(new_clean, p.label),
        raw_text=" ".join(words),
        clean_text=new_clean,
        label=p.label,
        source_tag="eda",
    )


@dataclass
class BalanceOutcome:
    """Shortfall bookkeeping for one balanced class."""

    label: ClassLabel
    after_downsample: int
    final: int
    target: int
    attempts: int

    @property
    def shortfall(self) -> int:
        return max(0, self.target - self.final)


def balance(
    train_pool: Corpus,
    plan: BalancePlan,
    lex: SynonymLexicon,
    outcomes: Optional[list[BalanceOutcome]] = None,
) -> Corpus:
    """Downsample then oversample each class toward its target.

    Augmentations whose clean_text duplicates any pre-existing post (or an
    earlier accepted augmentation of the same class) are dropped. Classes that
    cannot reach target within the attempt budget are reported, not fatal.
    Expects an already-deduplicated train pool.
    """
    ds = downsample(train_pool, plan)
    existing_texts = {p.clean_text for p in ds}

    augmented: list[LabeledPost] = []
    for label in ds.classes():
        sources = list(ds.by_class(label))
        target = plan.target(label)
        count = len(sources)
        if count >= target:
            if outcomes is not None:
                outcomes.append(BalanceOutcome(label, count, count, target, 0))
            continue

        rng = random.Random(_derive_seed(plan.seed, "eda", label.value))
        budget = RETRY_FACTOR * (target - count)
        accepted: list[LabeledPost] = []
        accepted_texts: set[str] = set()
        attempts = 0
        ops = list(EdaOp)
        while count + len(accepted) < target and attempts < budget:
            attempts += 1
            src = rng.choice(sources)
            op = rng.choice(ops)
            child = eda_augment(src, op, plan.eda_alpha, lex, seed=rng.getrandbits(32))
            if not child.clean_text:
                continue
            if child.clean_text in existing_texts or child.clean_text in accepted_texts:
                continue
            accepted.append(child)
            accepted_texts.add(child.clean_text)

        final = count + len(accepted)
        if final < target:
            log.warning(
                "class %s fell short of target: %d/%d after %d attempts",
                label, final, target, attempts,
            )
        if outcomes is not None:
            outcomes.append(BalanceOutcome(label, count, final, target, attempts))
        augmented.extend(accepted)

    return Corpus(list(ds) + augmented)


@dataclass
class BalanceReportRow:
    label: ClassLabel
    before_ds: int
    after_ds: int
    after_eda_dd: int
    test: int


def balance_report(
    train_pool: Corpus,
    after_ds: Corpus,
    balanced: Corpus,
    test_pool: Corpus,
) -> list[BalanceReportRow]:
    """Per-class counts at each preparation stage plus the final test set."""
    rows = []
    labels = sorted(
        set(train_pool.class_counts) | set(test_pool.class_counts),
        key=lambda c: c.value,
    )
    for label in labels:
        rows.append(
            BalanceReportRow(
                label=label,
                before_ds=train_pool.class_counts.get(label, 0),
                after_ds=after_ds.class_counts.get(label, 0),
                after_eda_dd=balanced.class_counts.get(label, 0),
                test=test_pool.class_counts.get(label, 0),
            )
        )
    return rows


def report_to_csv(rows: list[BalanceReportRow]) -> str:
    lines = ["class,before_ds,after_ds,after_eda_dd,test"]
    for r in rows:
        lines.append(f"{r.label.value},{r.before_ds},{r.after_ds},{r.after_eda_dd},{r.test}")
    return "\n".join(lines) + "\n"


def report_to_text(rows: list[BalanceReportRow]) -> str:
    header = f"{'Class':<22}{'Before DS':>12}{'After DS':>12}{'After EDA & DD':>16}{'Test':>10}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.label.display_name:<22}{r.before_ds:>12,}{r.after_ds:>12,}{r.after_eda_dd:>16,}{r.test:>10,}"
        )
    totals = (
        sum(r.before_ds for r in rows),
        sum(r.after_ds for r in rows),
        sum(r.after_eda_dd for r in rows),
        sum(r.test for r in rows),
    )
    lines.append("-" * len(header))
    lines.append(f"{'Total':<22}{totals[0]:>12,}{totals[1]:>12,}{totals[2]:>16,}{totals[3]:>10,}")
    return "\n".join(lines) + "\n"
