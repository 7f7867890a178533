from collections import Counter

import pytest

from decotok.captions import CaptionCorpus, Token, parse_token
from decotok.errors import FormatError, ValidationError
from decotok.synthetic import MotionSpec, caption_corpus, synthesize_corpus
from decotok.vocab import (Vocabulary, build_vocabulary, load_vocabulary,
                           save_vocabulary, vocabulary_from_text)


def _corpus(*captions):
    records = []
    for i, text in enumerate(captions):
        records.append((f"c{i}", [parse_token(tok) for tok in text.split()]))
    return CaptionCorpus(records=records)


def test_single_caption_counts():
    corpus = _corpus("red/ADJ ball/NOUN rolls/VERB")
    vocab = build_vocabulary(corpus, min_freq=1)
    assert vocab.n_spatial == 2
    assert vocab.n_temporal == 1
    assert [e.word for e in vocab.entries] == ["ball", "red", "rolls"]


def test_class_then_lexicographic_order():
    corpus = _corpus("zebra/NOUN apple/NOUN bad/ADJ good/ADJ runs/VERB "
                     "ambles/VERB slowly/ADV quickly/ADV")
    vocab = build_vocabulary(corpus, min_freq=1)
    words = [e.word for e in vocab.entries]
    assert words == ["apple", "zebra", "bad", "good", "ambles", "runs",
                     "quickly", "slowly"]
    assert vocab.spatial_range == range(0, 4)
    assert vocab.temporal_range == range(4, 8)


def test_min_freq_filter_and_other_excluded():
    corpus = _corpus("the/OTHER cat/NOUN cat/NOUN", "cat/NOUN dog/NOUN")
    vocab = build_vocabulary(corpus, min_freq=2)
    assert [e.word for e in vocab.entries] == ["cat"]
    assert vocab.entries[0].frequency == 3


def test_same_word_two_pos_is_two_entries():
    corpus = _corpus("left/ADJ left/ADV")
    vocab = build_vocabulary(corpus, min_freq=1)
    assert len(vocab) == 2
    assert vocab.index_of("left", "adjective") == 0
    assert vocab.index_of("left", "adverb") == 1


def test_empty_after_filter_raises():
    corpus = _corpus("the/OTHER a/OTHER")
    with pytest.raises(ValidationError):
        build_vocabulary(corpus, min_freq=1)
    with pytest.raises(ValidationError):
        build_vocabulary(CaptionCorpus(records=[]), min_freq=1)


def test_matches_hash_map_counting_oracle():
    spec = MotionSpec(shapes=("square", "circle", "cross"),
                      colors=("red", "green", "blue", "yellow"),
                      speeds=(("quickly", 2), ("slowly", 1)))
    pairs = synthesize_corpus(9, 40, spec, frames=3, height=16, width=16)
    corpus = caption_corpus(pairs)
    min_freq = 5

    counts = Counter()
    for _, tokens in corpus.records:
        for tok in tokens:
            if tok.pos != "other":
                counts[(tok.word, tok.pos)] += 1
    expected = sorted(
        ((w, p, f) for (w, p), f in counts.items() if f >= min_freq),
        key=lambda e: (("noun", "adjective", "verb", "adverb").index(e[1]),
                       e[0]))

    vocab = build_vocabulary(corpus, min_freq=min_freq)
    assert [(e.word, e.pos, e.frequency) for e in vocab.entries] == expected


def test_full_scale_partition_sizes():
    # An engineered corpus with the published class sizes: 5,078 nouns,
    # 5,403 adjectives, 9,267 verbs and 1,872 adverbs at min_freq = 5.
    sizes = {"NOUN": 5078, "ADJ": 5403, "VERB": 9267, "ADV": 1872}
    records = []
    line: list[Token] = []
    for tag, n in sizes.items():
        for i in range(n):
            tok = parse_token(f"w{tag.lower()}{i:05d}/{tag}")
            line.extend([tok] * 5)  # exactly at the threshold
            if len(line) >= 50:
                records.append((f"c{len(records)}", line))
                line = []
    # Sub-threshold words must be filtered.
    for i in range(100):
        line.extend([parse_token(f"rare{i:03d}/NOUN")] * 4)
    records.append(("tail", line))
    vocab = build_vocabulary(CaptionCorpus(records=records), min_freq=5)
    assert vocab.n_spatial == 10_481
    assert vocab.n_temporal == 11_139
    assert len(vocab) == 21_620


def test_vocabulary_file_round_trip(tmp_path):
    corpus = _corpus("red/ADJ ball/NOUN rolls/VERB fast/ADV")
    vocab = build_vocabulary(corpus, min_freq=1)
    path = tmp_path / "vocab.tsv"
    save_vocabulary(vocab, path)
    again = load_vocabulary(path)
    assert again.entries == vocab.entries
    assert again.spatial_range == vocab.spatial_range


def test_vocabulary_file_errors():
    with pytest.raises(FormatError):
        vocabulary_from_text("word only one field\n")
    with pytest.raises(FormatError):
        vocabulary_from_text("cat\tnoun\tmany\n")
    with pytest.raises(FormatError):
        vocabulary_from_text("cat\tpronoun\t5\n")
    with pytest.raises(FormatError):
        vocabulary_from_text("")
    # Entries out of POS-class order are rejected.
    with pytest.raises(FormatError):
        vocabulary_from_text("runs\tverb\t5\ncat\tnoun\t5\n")


def test_index_of_lookup():
    vocab = build_vocabulary(_corpus("red/ADJ ball/NOUN rolls/VERB"), 1)
    assert isinstance(vocab, Vocabulary)
    assert vocab.index_of("ball", "noun") == 0
    assert vocab.index_of("ball", "verb") is None
