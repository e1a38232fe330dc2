import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpusgen import build_corpus

from mediamind.analyzers import BuiltinBackend
from mediamind.embedding import Embedder
from mediamind.ingest import load_corpus
from mediamind.pipeline import builtin_video_pipeline, run_pipeline
from mediamind.resources import load_bundle

# Evaluation instant used wherever tests need a controlled clock: just after
# the last fixture day, so rolling windows intersect the corpus.
FIXED_NOW = datetime(2024, 3, 31, 0, 0, 0, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    return build_corpus(root, n_items=200, seed=7)


@pytest.fixture(scope="session")
def corpus_items(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture(scope="session")
def bundle():
    return load_bundle()


@pytest.fixture(scope="session")
def backend(bundle):
    return BuiltinBackend(bundle)


@pytest.fixture(scope="session")
def embedder(bundle):
    return Embedder(bundle.union_stopwords)


@pytest.fixture(scope="session")
def analyzed(corpus_items, backend):
    """(item, record) for every fixture item, analyzed at FIXED_NOW."""
    spec = builtin_video_pipeline()
    return [(item, run_pipeline(spec, item, backend, now=FIXED_NOW)) for item in corpus_items]
