"""Deterministic synthetic corpus generation.

The real corpora are not redistributable, so the repo ships (and tests build)
synthetic posts in the same schema: each class draws from a small pool of
theme words mixed with shared fillers, which makes classes lexically
separable without copying any source text.
"""

from __future__ import annotations

import random

from .corpus import Corpus, LabeledPost, clean_text, content_id
from .labels import ClassLabel

THEME_WORDS: dict[ClassLabel, list[str]] = {
    ClassLabel.AGE_CB: [
        "bullied", "school", "kids", "young", "teen", "classmates", "playground",
        "freshman", "boomer", "childish", "grade", "teased",
    ],
    ClassLabel.ANXIETY: [
        "anxious", "worry", "panic", "nervous", "racing", "heart", "attack",
        "restless", "dread", "overthinking", "shaking", "fear",
    ],
    ClassLabel.BIPOLAR: [
        "bipolar", "manic", "mania", "episode", "mood", "swings", "meds",
        "lithium", "depressive", "cycling", "highs", "lows",
    ],
    ClassLabel.ETHNICITY_CB: [
        "ethnicity", "racist", "race", "slur", "heritage", "immigrant",
        "accent", "culture", "foreigner", "slurs", "insults", "mocked",
    ],
    ClassLabel.GENDER_CB: [
        "gender", "sexist", "women", "girls", "misogyny", "objectify",
        "harass", "creep", "catcall", "harassed", "demean", "sexism",
    ],
    ClassLabel.NON_SUICIDE: [
        "hobby", "stories", "writing", "game", "music", "movie", "weekend",
        "fun", "recipe", "homework", "guitar", "coding",
    ],
    ClassLabel.PERSONALITY_DISORDER: [
        "borderline", "personality", "identity", "abandonment", "splitting",
        "unstable", "emptiness", "bpd", "impulsive", "attachment", "rage", "diagnosis",
    ],
    ClassLabel.RELIGION_CB: [
        "religion", "faith", "church", "mosque", "believers", "atheist",
        "preach", "sacred", "blasphemy", "sect", "worship", "heathen",
    ],
    ClassLabel.STRESS: [
        "stress", "deadline", "overwhelmed", "pressure", "exhausted",
        "workload", "burnout", "juggling", "stretched", "frazzled", "stressed", "overworked",
    ],
    ClassLabel.SUICIDE: [
        "suicide", "die", "kill", "myself", "end", "goodbye", "pills",
        "hopeless", "worthless", "pain", "ending", "gone",
    ],
}

FILLER_WORDS = [
    "i", "feel", "feeling", "today", "really", "know", "think", "people",
    "life", "time", "want", "need", "cant", "dont", "going", "much", "never",
    "always", "every", "day", "night", "made", "gets", "keeps", "like", "one",
    "about", "just", "been", "still", "even", "again", "things", "because",
]


def synthetic_post_text(label: ClassLabel, rng: random.Random, min_words: int = 8, max_words: int = 16) -> str:
    """One synthetic post: 40-60% theme words, the rest shared fillers."""
    length = rng.randint(min_words, max_words)
    n_theme = max(2, int(length * rng.uniform(0.4, 0.6)))
    words = [rng.choice(THEME_WORDS[label]) for _ in range(n_theme)]
    words += [rng.choice(FILLER_WORDS) for _ in range(length - n_theme)]
    rng.shuffle(words)
    return " ".join(words)


def synthetic_corpus(
    class_sizes: dict[ClassLabel, int],
    seed: int = 0,
    distinct: dict[ClassLabel, int] | None = None,
) -> Corpus:
    """Build a corpus with the given per-class sizes.

    `distinct` optionally caps the number of distinct texts per class; the
    remaining posts repeat earlier texts, which lets tests exercise
    deduplication with exact arithmetic.
    """
    rng = random.Random(seed)
    posts: list[LabeledPost] = []
    counter = 0
    for label in sorted(class_sizes, key=lambda c: c.value):
        size = class_sizes[label]
        n_distinct = min(distinct.get(label, size) if distinct else size, size)
        texts: list[str] = []
        seen: set[str] = set()
        while len(texts) < n_distinct:
            text = synthetic_post_text(label, rng)
            cleaned = clean_text(text)
            if cleaned in seen:
                continue
            seen.add(cleaned)
            texts.append(text)
        for i in range(size):
            text = texts[i] if i < n_distinct else texts[rng.randrange(n_distinct)]
            counter += 1
            posts.append(
                LabeledPost.make(text, label, post_id=f"syn-{counter:07d}", source_tag="synthetic")
            )
    return Corpus(posts)
