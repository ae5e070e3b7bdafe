import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from smscreen.corpus import Corpus, LabeledPost
from smscreen.features import TfidfModel
from smscreen.labels import CLASS_LABELS, ClassLabel
from smscreen.models import KIND_LOGREG, LinearClassifier


THEME_TERM = {
    ClassLabel.AGE_CB: "bullied",
    ClassLabel.ANXIETY: "anxious",
    ClassLabel.BIPOLAR: "bipolar",
    ClassLabel.ETHNICITY_CB: "racist",
    ClassLabel.GENDER_CB: "sexist",
    ClassLabel.NON_SUICIDE: "hobby",
    ClassLabel.PERSONALITY_DISORDER: "borderline",
    ClassLabel.RELIGION_CB: "faith",
    ClassLabel.STRESS: "deadline",
    ClassLabel.SUICIDE: "suicide",
}


@pytest.fixture(scope="session")
def toy_vectorizer() -> TfidfModel:
    """One vocabulary slot per class theme term, idf 1.0."""
    vocab = {THEME_TERM[c]: i for i, c in enumerate(CLASS_LABELS)}
    return TfidfModel(vocabulary=vocab, idf=np.ones(len(vocab)), max_features=len(vocab))


@pytest.fixture(scope="session")
def toy_model(toy_vectorizer) -> LinearClassifier:
    """Hand-built logistic model: theme term -> its class, confidently."""
    k = len(CLASS_LABELS)
    weights = np.zeros((k, k))
    for i in range(k):
        weights[i, i] = 6.0
    return LinearClassifier(
        kind=KIND_LOGREG,
        classes=CLASS_LABELS,
        weights=weights,
        bias=np.zeros(k),
        chosen_C=1.0,
        training_meta={"seed": 0, "folds": 0, "c_grid": [], "note": "hand built"},
    )


def make_corpus(rows: list[tuple[str, ClassLabel]]) -> Corpus:
    return Corpus(
        LabeledPost.make(text, label, post_id=f"p{i}") for i, (text, label) in enumerate(rows)
    )
