import json
import random
from collections import Counter
from datetime import datetime, timezone

import pytest

from conftest import FIXED_NOW

from mediamind.analyzers import BuiltinBackend, Gazetteer, Lexicon, analyze_sentiment
from mediamind.errors import PipelineError
from mediamind.ingest import make_item
from mediamind.pipeline import (
    AnalysisRecord,
    NodeSpec,
    PipelineSpec,
    TOPIC_K,
    builtin_video_pipeline,
    run_pipeline,
    validate_pipeline,
)
from mediamind.resources import LanguageResources, ResourceBundle

TS = datetime(2024, 1, 1, tzinfo=timezone.utc)


def test_builtin_validates():
    assert validate_pipeline(builtin_video_pipeline()) == []


def test_builtin_stage_multiset():
    spec = builtin_video_pipeline()
    assert Counter(n.kind for n in spec.nodes) == Counter(
        {"extract": 1, "asr": 1, "sentiment": 1, "ner": 1, "summarize": 1}
    )


def test_builtin_wiring():
    spec = builtin_video_pipeline()
    by_kind = {n.kind: n for n in spec.nodes}
    assert by_kind["asr"].inputs == [by_kind["extract"].node_id]
    for kind in ("sentiment", "ner", "summarize"):
        assert by_kind[kind].inputs == [by_kind["asr"].node_id]
    assert set(spec.outputs) == {by_kind["sentiment"].node_id, by_kind["ner"].node_id, by_kind["summarize"].node_id}
    assert by_kind["summarize"].params["max_sentences"] == "3"


def test_validate_reports_cycle_with_node_names():
    spec = PipelineSpec(
        pipeline_id="p",
        nodes=[
            NodeSpec("e", "extract"),
            NodeSpec("a", "passthrough", inputs=["b"]),
            NodeSpec("b", "passthrough", inputs=["a"]),
        ],
        outputs=["a"],
    )
    violations = validate_pipeline(spec)
    cycle = [v for v in violations if "cycle" in v]
    assert cycle and "a" in cycle[0] and "b" in cycle[0]


def test_validate_arity():
    spec = PipelineSpec(
        pipeline_id="p",
        nodes=[NodeSpec("e", "extract"), NodeSpec("s", "sentiment", inputs=["e", "e"])],
        outputs=["s"],
    )
    assert any("takes 1 input" in v for v in validate_pipeline(spec))


def test_validate_duplicate_and_unknown_refs():
    spec = PipelineSpec(
        pipeline_id="p",
        nodes=[NodeSpec("e", "extract"), NodeSpec("e", "passthrough", inputs=["ghost"])],
        outputs=["missing"],
    )
    violations = "\n".join(validate_pipeline(spec))
    assert "duplicate node_id" in violations
    assert "does not exist" in violations


def test_validate_requires_single_extract():
    spec = PipelineSpec(pipeline_id="p", nodes=[NodeSpec("a", "passthrough", inputs=["a"])], outputs=[])
    assert any("exactly one extract" in v for v in validate_pipeline(spec))


def _random_dag(rng):
    n = rng.randint(2, 8)
    nodes = [NodeSpec("n0", "extract")]
    for i in range(1, n):
        upstream = f"n{rng.randint(0, i - 1)}"
        nodes.append(NodeSpec(f"n{i}", "passthrough", inputs=[upstream]))
    return PipelineSpec(pipeline_id="r", nodes=nodes, outputs=[f"n{n - 1}"])


def test_random_cycles_always_rejected():
    rng = random.Random(40)
    for _ in range(200):
        spec = _random_dag(rng)
        assert validate_pipeline(spec) == []
        # introduce a back edge to create a cycle
        victim = rng.randrange(1, len(spec.nodes))
        downstream = rng.randrange(victim, len(spec.nodes))
        spec.nodes[victim].inputs = [spec.nodes[downstream].node_id]
        if victim == downstream or _reaches(spec, spec.nodes[victim].node_id, spec.nodes[downstream].node_id):
            assert any("cycle" in v for v in validate_pipeline(spec))


def _reaches(spec, src, dst):
    # does dst reach src via inputs? then src->dst closes a cycle
    by_id = {n.node_id: n for n in spec.nodes}
    stack, seen = [dst], set()
    while stack:
        cur = stack.pop()
        if cur == src:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(by_id[cur].inputs)
    return False


TWO_ENTRY_LEXICON = Lexicon(language="en", entries={"great": 1.0, "product": 0.2}, negators=frozenset())


def _tiny_bundle():
    return ResourceBundle(
        languages={
            "en": LanguageResources(
                language="en",
                lexicon=TWO_ENTRY_LEXICON,
                gazetteer=Gazetteer(language="en", entries={"acme corp": "ORG"}),
                stopwords=frozenset({"the"}),
            )
        }
    )


def test_run_builtin_matches_direct_sentiment():
    backend = BuiltinBackend(_tiny_bundle())
    item = make_item("local-file", "https://x/p", "t", TS, "en", "text", body_text="great product")
    record = run_pipeline(builtin_video_pipeline(), item, backend, now=FIXED_NOW)
    assert record.sentiment == analyze_sentiment("great product", TWO_ENTRY_LEXICON)
    assert record.analyzed_at == FIXED_NOW
    assert record.pipeline_id == "video-analysis"


def test_passthrough_only_pipeline_defaults():
    backend = BuiltinBackend(_tiny_bundle())
    spec = PipelineSpec(
        pipeline_id="identity",
        nodes=[NodeSpec("e", "extract"), NodeSpec("p", "passthrough", inputs=["e"])],
        outputs=["p"],
    )
    item = make_item("local-file", "https://x/p", "t", TS, "en", "text", body_text="great product")
    record = run_pipeline(spec, item, backend, now=FIXED_NOW)
    assert record.transcript.text == "great product"
    assert record.sentiment.label == "neutral" and record.sentiment.score == 0.0
    assert record.entities == []
    assert record.summary.text == "" and record.summary.sentence_indices == []
    assert record.topics == []


def test_missing_sidecar_error_names_asr_node(tmp_path):
    backend = BuiltinBackend(_tiny_bundle())
    item = make_item(
        "local-file", "https://x/v", "t", TS, "en", "video", transcript_sidecar=str(tmp_path / "gone.txt")
    )
    with pytest.raises(PipelineError, match="asr"):
        run_pipeline(builtin_video_pipeline(), item, backend, now=FIXED_NOW)


def test_invalid_pipeline_rejected_before_execution():
    calls = []

    class CountingBackend(BuiltinBackend):
        def transcribe(self, item):
            calls.append("transcribe")
            return super().transcribe(item)

    backend = CountingBackend(_tiny_bundle())
    spec = builtin_video_pipeline()
    spec.nodes.append(NodeSpec("dup", "sentiment", inputs=["asr", "asr"]))
    item = make_item("local-file", "https://x/p", "t", TS, "en", "text", body_text="x")
    with pytest.raises(PipelineError, match="invalid pipeline"):
        run_pipeline(spec, item, backend, now=FIXED_NOW)
    assert calls == []


def test_composition_against_direct_analyzers(corpus_items, backend, analyzed):
    """run_pipeline(builtin) equals manual stage composition, field by field."""
    spec = builtin_video_pipeline()
    for item, record in analyzed[:60]:
        transcript = backend.transcribe(item)
        assert record.transcript == transcript
        assert record.sentiment == backend.sentiment(transcript.text, item.language)
        assert record.entities == backend.entities(transcript.text, item.language)
        assert record.summary == backend.summary(transcript.text, 3, item.language)
        assert record.topics == backend.topics(transcript.text, TOPIC_K, item.language)
        assert record.language == item.language
        assert record.item_id == item.id
        assert record.pipeline_id == spec.pipeline_id


def test_determinism_byte_identical(corpus_items, backend):
    spec = builtin_video_pipeline()
    for item in corpus_items[:20]:
        a = run_pipeline(spec, item, backend, now=FIXED_NOW)
        b = run_pipeline(spec, item, backend, now=FIXED_NOW)
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_spec_dict_roundtrip():
    spec = builtin_video_pipeline()
    again = PipelineSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec


def test_record_dict_roundtrip(analyzed):
    for _, record in analyzed[:10]:
        assert AnalysisRecord.from_dict(record.to_dict()) == record
