import random
from collections import Counter
from datetime import datetime, timezone

import pytest

from mediamind.analyzers import (
    EntitySpan,
    Gazetteer,
    Lexicon,
    analyze_sentiment,
    extract_entities,
    extract_topics,
    label_for_score,
    split_sentences,
    summarize,
    tokenize,
    tokenize_with_offsets,
    transcribe,
)
from mediamind.errors import TranscriptionError, ValidationError
from mediamind.ingest import make_item
from mediamind.resources import load_bundle, load_gazetteer, load_lexicon

TS = datetime(2024, 1, 1, tzinfo=timezone.utc)


# --- tokenize ---

def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_strips_punctuation_and_lowercases():
    # hand-derived from the stated rule
    assert tokenize("Great, really great!") == ["great", "really", "great"]


def test_tokenize_keeps_internal_punctuation():
    assert tokenize("Acme-Corp") == ["acme-corp"]


def test_tokenize_drops_all_punctuation_chunks():
    assert tokenize("-- ... ??") == []


def test_tokenize_offsets_match_slices():
    text = "  (Hello), wörld-wide Z9! "
    for token, start, end in tokenize_with_offsets(text):
        assert text[start:end].lower() == token


# --- sentiment ---

LEX = Lexicon(language="en", entries={"great": 1.0, "excellent": 1.0}, negators=frozenset())
NEG_LEX = Lexicon(language="en", entries={"good": 1.0}, negators=frozenset({"not"}))


def test_sentiment_empty():
    result = analyze_sentiment("", LEX)
    assert (result.score, result.label, result.matched_tokens) == (0.0, "neutral", 0)


def test_sentiment_mean_of_weights():
    result = analyze_sentiment("great excellent", LEX)
    assert result.score == 1.0
    assert result.label == "positive"
    assert result.matched_tokens == 2


def test_sentiment_negation_flip():
    result = analyze_sentiment("not good", NEG_LEX)
    assert result.score == -1.0
    assert result.label == "negative"
    assert result.matched_tokens == 1


def test_sentiment_negation_window_is_three_tokens():
    assert analyze_sentiment("not one two good", NEG_LEX).score == -1.0  # negator 3 back
    assert analyze_sentiment("not one two three good", NEG_LEX).score == 1.0  # negator 4 back


def brute_sentiment(text, entries, negators):
    """Independent restatement of the scoring rule."""
    tokens = tokenize(text)
    signed = []
    for i in range(len(tokens)):
        if tokens[i] not in entries:
            continue
        flip = False
        j = i - 1
        while j >= 0 and j >= i - 3:
            if tokens[j] in negators:
                flip = True
            j -= 1
        weight = entries[tokens[i]]
        signed.append(-weight if flip else weight)
    if not signed:
        return 0.0, 0
    return sum(signed) / len(signed), len(signed)


VOCAB = ["great", "good", "bad", "awful", "meh", "market", "not", "never", "the", "rises", "falls"]


def test_sentiment_brute_force_equivalence():
    rng = random.Random(11)
    entries = {"great": 0.8, "good": 0.5, "bad": -0.5, "awful": -0.9, "market": 0.1}
    negators = frozenset({"not", "never"})
    lexicon = Lexicon(language="en", entries=entries, negators=negators)
    for _ in range(1000):
        text = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(0, 25)))
        expected_score, expected_matched = brute_sentiment(text, entries, negators)
        result = analyze_sentiment(text, lexicon)
        assert result.score == expected_score
        assert result.matched_tokens == expected_matched
        assert result.label == label_for_score(result.score)
        assert -1.0 <= result.score <= 1.0


def test_label_thresholds_exact():
    assert label_for_score(0.1) == "neutral"
    assert label_for_score(0.10000001) == "positive"
    assert label_for_score(-0.1) == "neutral"
    assert label_for_score(-0.10000001) == "negative"


# --- entities ---

GAZ = Gazetteer(language="en", entries={"acme corp": "ORG", "new york": "LOC", "new york city": "LOC"})


def test_entities_empty():
    assert extract_entities("", GAZ) == []


def test_entities_offsets_hand_counted():
    spans = extract_entities("Acme Corp rises", GAZ)
    assert spans == [EntitySpan(surface="Acme Corp", type="ORG", start=0, end=9)]


def test_entities_longest_match_wins():
    spans = extract_entities("Visit New York City today", GAZ)
    assert len(spans) == 1
    assert spans[0].surface == "New York City"
    assert spans[0].type == "LOC"


def test_entities_exclude_surrounding_punctuation():
    text = "News: Acme Corp, again"
    spans = extract_entities(text, GAZ)
    assert spans[0].surface == "Acme Corp"
    assert text[spans[0].start:spans[0].end] == "Acme Corp"


def test_entities_no_overlap_random():
    rng = random.Random(5)
    words = ["alpha", "beta", "gamma", "delta", "omega", "kappa"]
    for _ in range(200):
        phrases = {}
        for _ in range(rng.randint(1, 6)):
            phrase = " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
            phrases[phrase] = rng.choice(["PERSON", "ORG", "LOC"])
        gaz = Gazetteer(language="en", entries=phrases)
        text = " ".join(rng.choice(words) for _ in range(rng.randint(0, 30)))
        spans = extract_entities(text, gaz)
        for a, b in zip(spans, spans[1:]):
            assert a.end <= b.start  # ordered and non-overlapping
        for span in spans:
            assert text[span.start:span.end] == span.surface


# --- sentences and summaries ---

def test_split_sentences_rules():
    assert split_sentences("One. Two? Three!") == ["One.", "Two?", "Three!"]
    assert split_sentences("Wait?! Ok") == ["Wait?!", "Ok"]
    assert split_sentences("v1.2 is out. Yes.") == ["v1.2 is out.", "Yes."]
    assert split_sentences("") == []


def test_summarize_single_sentence():
    summary = summarize("Only sentence here", 3)
    assert summary.text == "Only sentence here"
    assert summary.sentence_indices == [0]


def test_summarize_tie_prefers_earlier():
    summary = summarize("aa bb. aa bb.", 1)
    assert summary.sentence_indices == [0]


def brute_summary(text, max_sentences, stopwords):
    """Score all sentences, sort, take top, re-sort by index."""
    sentences = split_sentences(text)
    counts = Counter(t for t in tokenize(text) if t not in stopwords)
    scores = []
    for idx, sentence in enumerate(sentences):
        total = 0
        for token in tokenize(sentence):
            if token not in stopwords:
                total += counts[token]
        scores.append((idx, total))
    ranked = sorted(scores, key=lambda p: (-p[1], p[0]))
    picked = sorted(i for i, _ in ranked[:max_sentences])
    return picked, " ".join(sentences[i] for i in picked)


def test_summarize_matches_brute_force():
    rng = random.Random(23)
    words = ["tesla", "port", "energy", "update", "the", "a", "news", "battery", "ship"]
    stopwords = frozenset({"the", "a"})
    for _ in range(200):
        n_sentences = rng.randint(0, 12)
        sentences = []
        for _ in range(n_sentences):
            sentences.append(" ".join(rng.choice(words) for _ in range(rng.randint(1, 8))) + rng.choice(". ? !").strip())
        text = " ".join(sentences)
        max_s = rng.randint(1, 5)
        expected_indices, expected_text = brute_summary(text, max_s, stopwords)
        summary = summarize(text, max_s, stopwords)
        assert summary.sentence_indices == expected_indices
        assert summary.text == expected_text
        assert all(b > a for a, b in zip(summary.sentence_indices, summary.sentence_indices[1:]))


def test_summarize_rejects_zero():
    with pytest.raises(ValidationError):
        summarize("x", 0)


# --- topics ---

def test_topics_empty():
    assert extract_topics("", 3) == []


def test_topics_frequency_then_lexicographic():
    assert extract_topics("tesla tesla ship port", 2) == ["tesla", "port"]


def test_topics_k_larger_than_vocab():
    assert extract_topics("tesla ship", 10) == ["ship", "tesla"]


def test_topics_drop_stopwords():
    assert extract_topics("the the the tesla", 2, frozenset({"the"})) == ["tesla"]


# --- transcribe ---

def test_transcribe_text_item():
    item = make_item("local-file", "https://x/a", "t", TS, "en", "text", body_text="hello")
    transcript = transcribe(item)
    assert transcript.text == "hello"
    assert transcript.source == "body-text"


def test_transcribe_video_sidecar(tmp_path):
    sidecar = tmp_path / "s.txt"
    sidecar.write_text("quarterly results improved", encoding="utf-8")
    item = make_item("local-file", "https://x/v", "t", TS, "en", "video", transcript_sidecar=str(sidecar))
    transcript = transcribe(item)
    assert transcript.text == "quarterly results improved"
    assert transcript.source == "sidecar"


def test_transcribe_missing_sidecar_file(tmp_path):
    item = make_item("local-file", "https://x/v", "t", TS, "en", "video", transcript_sidecar=str(tmp_path / "gone.txt"))
    with pytest.raises(TranscriptionError) as err:
        transcribe(item)
    assert err.value.item_id == item.id


def test_transcribe_image_is_empty():
    item = make_item("local-file", "https://x/i", "t", TS, "en", "image")
    assert transcribe(item).text == ""


# --- resources ---

def test_lexicon_validation():
    with pytest.raises(ValidationError):
        Lexicon(language="en", entries={"Bad": 0.5}).validate()
    with pytest.raises(ValidationError):
        Lexicon(language="en", entries={"ok": 1.5}).validate()


def test_gazetteer_validation():
    with pytest.raises(ValidationError):
        Gazetteer(language="en", entries={"x": "THING"}).validate()


def test_load_lexicon_negators(tmp_path):
    path = tmp_path / "xx.lexicon.tsv"
    path.write_text("#negator\tnot\ngood\t0.5\n# a comment\n", encoding="utf-8")
    lexicon = load_lexicon(path, "xx")
    assert lexicon.entries == {"good": 0.5}
    assert lexicon.negators == frozenset({"not"})


def test_load_lexicon_bad_weight(tmp_path):
    path = tmp_path / "xx.lexicon.tsv"
    path.write_text("good\t2.0\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_lexicon(path, "xx")


def test_load_gazetteer_bad_type(tmp_path):
    path = tmp_path / "xx.gazetteer.tsv"
    path.write_text("acme\tCOMPANY\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_gazetteer(path, "xx")


def test_bundle_language_fallback(bundle):
    assert bundle.for_language("en").language == "en"
    assert bundle.for_language("en-GB").language == "en"
    unknown = bundle.for_language("fr")
    assert unknown.lexicon.entries == {}
    assert unknown.gazetteer.entries == {}


def test_bundle_fallback_yields_neutral_and_empty(bundle):
    fr = bundle.for_language("fr")
    assert analyze_sentiment("terrible crisis", fr.lexicon).label == "neutral"
    assert extract_entities("Tesla in Berlin", fr.gazetteer) == []


def test_missing_resource_dir_errors():
    with pytest.raises(ValidationError):
        load_bundle("/nonexistent/resources")
