"""Language-keyed analysis resources: lexicons, gazetteers, stopword lists.

A resources directory holds flat files named by IETF language tag:

    <lang>.lexicon.tsv      lines "token<TAB>weight"; "#negator<TAB>token"
                            lines declare negators; other "#" lines are comments
    <lang>.gazetteer.tsv    lines "phrase<TAB>TYPE" with TYPE in PERSON/ORG/LOC
    <lang>.stopwords.txt    one token per line

The package ships defaults for "en" and "es". Languages without resources
fall back to the empty "und" set. Later lines override earlier ones, so a
site-local file can shadow entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .analyzers import Gazetteer, Lexicon
from .errors import ValidationError

DEFAULT_RESOURCE_DIR = Path(__file__).parent / "resources"


@dataclass
class LanguageResources:
    language: str
    lexicon: Lexicon
    gazetteer: Gazetteer
    stopwords: frozenset[str] = frozenset()


def _empty_resources(language: str) -> LanguageResources:
    return LanguageResources(
        language=language,
        lexicon=Lexicon(language=language),
        gazetteer=Gazetteer(language=language),
        stopwords=frozenset(),
    )


def load_lexicon(path: Path, language: str) -> Lexicon:
    entries: dict[str, float] = {}
    negators: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#negator\t"):
            negators.add(line.split("\t", 1)[1].strip().lower())
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path.name}:{lineno}: expected 'token<TAB>weight'")
        token = parts[0].strip().lower()
        try:
            weight = float(parts[1])
        except ValueError as exc:
            raise ValidationError(f"{path.name}:{lineno}: bad weight {parts[1]!r}") from exc
        entries[token] = weight
    lexicon = Lexicon(language=language, entries=entries, negators=frozenset(negators))
    lexicon.validate()
    return lexicon


def load_gazetteer(path: Path, language: str) -> Gazetteer:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path.name}:{lineno}: expected 'phrase<TAB>TYPE'")
        entries[parts[0].strip().lower()] = parts[1].strip()
    gazetteer = Gazetteer(language=language, entries=entries)
    gazetteer.validate()
    return gazetteer


def load_stopwords(path: Path) -> frozenset[str]:
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        token = line.strip().lower()
        if token and not token.startswith("#"):
            words.add(token)
    return frozenset(words)


@dataclass
class ResourceBundle:
    """All loaded language resources, with 'und' fallback routing."""

    languages: dict[str, LanguageResources] = field(default_factory=dict)

    def for_language(self, tag: str) -> LanguageResources:
        """Resolve tag -> exact match -> primary subtag -> empty 'und'."""
        if tag in self.languages:
            return self.languages[tag]
        primary = tag.split("-")[0].lower()
        if primary in self.languages:
            return self.languages[primary]
        return self.languages.get("und") or _empty_resources("und")

    @property
    def union_stopwords(self) -> frozenset[str]:
        out: set[str] = set()
        for res in self.languages.values():
            out |= res.stopwords
        return frozenset(out)


def load_bundle(resource_dir: str | Path | None = None) -> ResourceBundle:
    """Load every language found in the directory (default: packaged files)."""
    directory = Path(resource_dir) if resource_dir else DEFAULT_RESOURCE_DIR
    if not directory.is_dir():
        raise ValidationError(f"resources directory not found: {directory}")
    tags: set[str] = set()
    for path in directory.iterdir():
        name = path.name
        for suffix in (".lexicon.tsv", ".gazetteer.tsv", ".stopwords.txt"):
            if name.endswith(suffix):
                tags.add(name[: -len(suffix)])
    languages: dict[str, LanguageResources] = {}
    for tag in sorted(tags):
        lex_path = directory / f"{tag}.lexicon.tsv"
        gaz_path = directory / f"{tag}.gazetteer.tsv"
        stop_path = directory / f"{tag}.stopwords.txt"
        languages[tag] = LanguageResources(
            language=tag,
            lexicon=load_lexicon(lex_path, tag) if lex_path.is_file() else Lexicon(language=tag),
            gazetteer=load_gazetteer(gaz_path, tag) if gaz_path.is_file() else Gazetteer(language=tag),
            stopwords=load_stopwords(stop_path) if stop_path.is_file() else frozenset(),
        )
    languages.setdefault("und", _empty_resources("und"))
    return ResourceBundle(languages=languages)
