"""Composition root: build the full application state from a Config."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable
from datetime import datetime

from .agent import Agent, MemoryStore, SessionStore, ToolRegistry
from .alerts import AlertStore
from .analyzers import AnalyzerBackend, BuiltinBackend
from .config import Config
from .embedding import Embedder
from .index import MediaIndex
from .resources import ResourceBundle, load_bundle
from .timeutil import utc_now
from .tools import build_default_registry

Clock = Callable[[], datetime]


@dataclass
class AppState:
    config: Config
    bundle: ResourceBundle
    embedder: Embedder
    index: MediaIndex
    alerts: AlertStore
    memory: MemoryStore
    sessions: SessionStore
    backend: AnalyzerBackend
    registry: ToolRegistry
    agent: Agent
    clock: Clock


def build_state(config: Config, clock: Clock = utc_now, persistent: bool = True) -> AppState:
    """Wire every subsystem; ``persistent=False`` keeps stores in memory."""
    bundle = load_bundle(config.resources_dir)
    embedder = Embedder(bundle.union_stopwords)
    store = config.store_dir if persistent else None
    index = MediaIndex(embedder, store_dir=store)
    alerts = AlertStore(store_dir=store)
    memory = MemoryStore(store_dir=store)
    if config.backend_url:
        from .remote import RemoteBackend

        backend: AnalyzerBackend = RemoteBackend(config.backend_url)
    else:
        backend = BuiltinBackend(bundle)
    registry = build_default_registry(index=index, alerts=alerts, memory=memory, backend=backend, clock=clock)
    planner = None
    if config.planner_url:
        from .remote import RemotePlanner

        planner = RemotePlanner(config.planner_url)
    agent = Agent(registry=registry, memory=memory, planner=planner)
    return AppState(
        config=config,
        bundle=bundle,
        embedder=embedder,
        index=index,
        alerts=alerts,
        memory=memory,
        sessions=SessionStore(),
        backend=backend,
        registry=registry,
        agent=agent,
        clock=clock,
    )
