"""Validated DAG executor composing analyzer backends into runnable pipelines.

Node kinds are a closed vocabulary (extract, asr, sentiment, ner, summarize,
passthrough); extension happens through the backend interface, not new
kinds. The built-in video-analysis pipeline wires
extract -> asr -> {sentiment, ner, summarize}.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime

from .analyzers import (
    AnalyzerBackend,
    EntitySpan,
    SentimentResult,
    Summary,
    Transcript,
)
from .errors import PipelineError
from .ingest import MediaItem
from .timeutil import format_rfc3339, parse_rfc3339

NODE_KINDS = ("extract", "asr", "sentiment", "ner", "summarize", "passthrough")

# inputs each kind expects; extract is the single zero-input root
NODE_ARITY = {"extract": 0, "asr": 1, "sentiment": 1, "ner": 1, "summarize": 1, "passthrough": 1}

DEFAULT_MAX_SENTENCES = 3
TOPIC_K = 5

BUILTIN_PIPELINE_ID = "video-analysis"


@dataclass
class NodeSpec:
    node_id: str
    kind: str
    inputs: list[str] = field(default_factory=list)
    params: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"node_id": self.node_id, "kind": self.kind, "inputs": list(self.inputs), "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> NodeSpec:
        return cls(
            node_id=data["node_id"],
            kind=data["kind"],
            inputs=list(data.get("inputs", [])),
            params={str(k): str(v) for k, v in data.get("params", {}).items()},
        )


@dataclass
class PipelineSpec:
    pipeline_id: str
    nodes: list[NodeSpec]
    outputs: list[str]

    def to_dict(self) -> dict:
        return {
            "pipeline_id": self.pipeline_id,
            "nodes": [n.to_dict() for n in self.nodes],
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_dict(cls, data: dict) -> PipelineSpec:
        return cls(
            pipeline_id=data["pipeline_id"],
            nodes=[NodeSpec.from_dict(n) for n in data.get("nodes", [])],
            outputs=list(data.get("outputs", [])),
        )


@dataclass
class AnalysisRecord:
    """Full pipeline output for one item."""

    item_id: str
    transcript: Transcript
    sentiment: SentimentResult
    entities: list[EntitySpan]
    summary: Summary
    topics: list[str]
    language: str
    analyzed_at: datetime
    pipeline_id: str

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "transcript": self.transcript.to_dict(),
            "sentiment": self.sentiment.to_dict(),
            "entities": [e.to_dict() for e in self.entities],
            "summary": self.summary.to_dict(),
            "topics": list(self.topics),
            "language": self.language,
            "analyzed_at": format_rfc3339(self.analyzed_at),
            "pipeline_id": self.pipeline_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> AnalysisRecord:
        return cls(
            item_id=data["item_id"],
            transcript=Transcript.from_dict(data["transcript"]),
            sentiment=SentimentResult.from_dict(data["sentiment"]),
            entities=[EntitySpan.from_dict(e) for e in data["entities"]],
            summary=Summary.from_dict(data["summary"]),
            topics=list(data["topics"]),
            language=data["language"],
            analyzed_at=parse_rfc3339(data["analyzed_at"]),
            pipeline_id=data["pipeline_id"],
        )


def validate_pipeline(spec: PipelineSpec) -> list[str]:
    """Return every invariant violation, with node context; empty means ok."""
    violations: list[str] = []
    seen: set[str] = set()
    for node in spec.nodes:
        if node.node_id in seen:
            violations.append(f"duplicate node_id {node.node_id!r}")
        seen.add(node.node_id)
    ids = {n.node_id for n in spec.nodes}
    for node in spec.nodes:
        if node.kind not in NODE_KINDS:
            violations.append(f"node {node.node_id!r}: unknown kind {node.kind!r}")
            continue
        expected = NODE_ARITY[node.kind]
        if len(node.inputs) != expected:
            violations.append(
                f"node {node.node_id!r}: kind {node.kind} takes {expected} input(s), got {len(node.inputs)}"
            )
        for ref in node.inputs:
            if ref not in ids:
                violations.append(f"node {node.node_id!r}: input {ref!r} does not exist")
        if node.kind == "summarize" and "max_sentences" in node.params:
            raw = node.params["max_sentences"]
            if not raw.isdigit() or int(raw) < 1:
                violations.append(f"node {node.node_id!r}: max_sentences must be a positive integer, got {raw!r}")

    extract_nodes = [n for n in spec.nodes if n.kind == "extract"]
    if len(extract_nodes) != 1:
        violations.append(f"pipeline must have exactly one extract node, found {len(extract_nodes)}")

    for out in spec.outputs:
        if out not in ids:
            violations.append(f"output {out!r} does not exist")

    cycle = _find_cycle_nodes(spec)
    if cycle:
        violations.append("cycle involving nodes " + ", ".join(sorted(cycle)))
    return violations


def _find_cycle_nodes(spec: PipelineSpec) -> set[str]:
    """Kahn's algorithm; whatever cannot be peeled off sits on a cycle."""
    ids = {n.node_id for n in spec.nodes}
    indegree = {n.node_id: 0 for n in spec.nodes}
    downstream: dict[str, list[str]] = {n.node_id: [] for n in spec.nodes}
    for node in spec.nodes:
        for ref in node.inputs:
            if ref in ids:
                indegree[node.node_id] += 1
                downstream[ref].append(node.node_id)
    ready = [nid for nid, deg in indegree.items() if deg == 0]
    done = 0
    while ready:
        nid = ready.pop()
        done += 1
        for nxt in downstream[nid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    return {nid for nid, deg in indegree.items() if deg > 0} if done < len(ids) else set()


def topo_levels(spec: PipelineSpec) -> list[list[NodeSpec]]:
    """Topological layers; nodes within a layer are independent."""
    by_id = {n.node_id: n for n in spec.nodes}
    remaining = dict(by_id)
    resolved: set[str] = set()
    levels: list[list[NodeSpec]] = []
    while remaining:
        layer = [n for n in remaining.values() if all(ref in resolved for ref in n.inputs)]
        if not layer:
            raise PipelineError("cannot order pipeline nodes (cycle)")
        layer.sort(key=lambda n: n.node_id)
        levels.append(layer)
        for node in layer:
            resolved.add(node.node_id)
            del remaining[node.node_id]
    return levels


def builtin_video_pipeline() -> PipelineSpec:
    """The built-in five-stage analysis pipeline."""
    return PipelineSpec(
        pipeline_id=BUILTIN_PIPELINE_ID,
        nodes=[
            NodeSpec(node_id="extract", kind="extract"),
            NodeSpec(node_id="asr", kind="asr", inputs=["extract"]),
            NodeSpec(node_id="sentiment", kind="sentiment", inputs=["asr"]),
            NodeSpec(node_id="ner", kind="ner", inputs=["asr"]),
            NodeSpec(
                node_id="summarize",
                kind="summarize",
                inputs=["asr"],
                params={"max_sentences": str(DEFAULT_MAX_SENTENCES)},
            ),
        ],
        outputs=["sentiment", "ner", "summarize"],
    )


def _text_of(value) -> str:
    if isinstance(value, Transcript):
        return value.text
    if isinstance(value, MediaItem):
        return value.body_text or ""
    if isinstance(value, str):
        return value
    return ""


def _run_node(node: NodeSpec, values: dict, item: MediaItem, backend: AnalyzerBackend):
    if node.kind == "extract":
        return item
    upstream = values[node.inputs[0]]
    if node.kind == "passthrough":
        return upstream
    if node.kind == "asr":
        if not isinstance(upstream, MediaItem):
            raise PipelineError(f"node {node.node_id!r}: asr input must be the extract node")
        return backend.transcribe(upstream)
    text = _text_of(upstream)
    if node.kind == "sentiment":
        return backend.sentiment(text, item.language)
    if node.kind == "ner":
        return backend.entities(text, item.language)
    if node.kind == "summarize":
        max_sentences = int(node.params.get("max_sentences", str(DEFAULT_MAX_SENTENCES)))
        summary = backend.summary(text, max_sentences, item.language)
        topics = backend.topics(text, TOPIC_K, item.language)
        return summary, topics
    raise PipelineError(f"node {node.node_id!r}: unknown kind {node.kind!r}")


def run_pipeline(
    spec: PipelineSpec,
    item: MediaItem,
    backend: AnalyzerBackend,
    now: datetime,
) -> AnalysisRecord:
    """Execute the pipeline on one item.

    Nodes run in topological order; independent nodes of a layer may run
    concurrently, but results are identical to sequential execution because
    every node is a pure function of its inputs. ``now`` becomes
    ``analyzed_at`` so callers control timestamps.

    Record fields come from the ``outputs`` nodes (first of each kind);
    stages absent from the outputs keep well-formed defaults. The transcript
    is taken from the pipeline's asr node when exactly one exists, else it
    falls back to the item's body text.
    """
    violations = validate_pipeline(spec)
    if violations:
        raise PipelineError("invalid pipeline: " + "; ".join(violations))

    values: dict[str, object] = {}
    for layer in topo_levels(spec):
        if len(layer) == 1:
            node = layer[0]
            values[node.node_id] = _execute_with_context(node, values, item, backend)
        else:
            with ThreadPoolExecutor(max_workers=len(layer)) as pool:
                futures = {n.node_id: pool.submit(_execute_with_context, n, values, item, backend) for n in layer}
                for node_id, future in futures.items():
                    values[node_id] = future.result()

    asr_nodes = [n for n in spec.nodes if n.kind == "asr"]
    if len(asr_nodes) == 1:
        transcript = values[asr_nodes[0].node_id]
    else:
        transcript = Transcript(item_id=item.id, text=item.body_text or "", source="body-text")

    sentiment: SentimentResult | None = None
    entities: list[EntitySpan] | None = None
    summarized: tuple[Summary, list[str]] | None = None
    by_id = {n.node_id: n for n in spec.nodes}
    for out in spec.outputs:
        kind = by_id[out].kind
        value = values[out]
        if kind == "sentiment" and sentiment is None and isinstance(value, SentimentResult):
            sentiment = value
        elif kind == "ner" and entities is None and isinstance(value, list):
            entities = value
        elif kind == "summarize" and summarized is None and isinstance(value, tuple):
            summarized = value
    if sentiment is None:
        sentiment = SentimentResult(score=0.0, label="neutral", matched_tokens=0)
    if entities is None:
        entities = []
    summary, topics = summarized if summarized else (Summary(text="", sentence_indices=[]), [])

    return AnalysisRecord(
        item_id=item.id,
        transcript=transcript,
        sentiment=sentiment,
        entities=entities,
        summary=summary,
        topics=topics,
        language=item.language,
        analyzed_at=now,
        pipeline_id=spec.pipeline_id,
    )


def _execute_with_context(node: NodeSpec, values: dict, item: MediaItem, backend: AnalyzerBackend):
    try:
        return _run_node(node, values, item, backend)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"node {node.node_id!r} failed: {exc}") from exc
