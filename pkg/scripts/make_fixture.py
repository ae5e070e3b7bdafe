"""Regenerate the shipped synthetic fixture corpus (deterministic)."""

from pathlib import Path

from smscreen.corpus import save_corpus
from smscreen.labels import ClassLabel
from smscreen.synthetic import synthetic_corpus

SIZES = {
    ClassLabel.AGE_CB: 120,
    ClassLabel.ANXIETY: 100,
    ClassLabel.BIPOLAR: 80,
    ClassLabel.ETHNICITY_CB: 120,
    ClassLabel.GENDER_CB: 120,
    ClassLabel.NON_SUICIDE: 400,
    ClassLabel.PERSONALITY_DISORDER: 60,
    ClassLabel.RELIGION_CB: 120,
    ClassLabel.STRESS: 80,
    ClassLabel.SUICIDE: 400,
}


def main() -> None:
    corpus = synthetic_corpus(SIZES, seed=20250101)
    out = Path(__file__).resolve().parent.parent / "fixtures" / "synthetic_corpus.jsonl"
    out.parent.mkdir(exist_ok=True)
    save_corpus(corpus, out)
    print(f"wrote {len(corpus)} posts -> {out}")


if __name__ == "__main__":
    main()
