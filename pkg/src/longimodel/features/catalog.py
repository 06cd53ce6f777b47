"""Feature catalog: versioned definitions with dependency tracking.

Re-registering an identical definition is a no-op; any change to params,
dependencies, generator, type, or group bumps the version by one. The
dependency graph over feature names must stay acyclic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from ..domain import canonical_encode
from ..errors import CycleError, NotFoundError, RegistrationError
from ..persist import append_jsonl, read_jsonl


@dataclass(frozen=True)
class FeatureDefinition:
    name: str
    version: int
    generator_id: str
    params: Mapping[str, object] = field(default_factory=dict)
    dependencies: tuple[str, ...] = ()
    value_type: str = "numeric"
    group_id: str | None = None

    def __post_init__(self) -> None:
        if self.value_type not in ("numeric", "categorical"):
            raise RegistrationError(f"value_type must be numeric or categorical, got {self.value_type!r}")
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        object.__setattr__(self, "params", dict(self.params))

    def content_key(self) -> bytes:
        """Canonical bytes of everything except the version."""
        return canonical_encode(
            {
                "name": self.name,
                "generator_id": self.generator_id,
                "params": dict(self.params),
                "dependencies": list(self.dependencies),
                "value_type": self.value_type,
                "group_id": self.group_id,
            }
        )


@dataclass(frozen=True)
class CatalogReceipt:
    name: str
    version: int
    created: bool


def _def_to_doc(d: FeatureDefinition) -> dict:
    return {
        "name": d.name,
        "version": d.version,
        "generator_id": d.generator_id,
        "params": dict(d.params),
        "dependencies": list(d.dependencies),
        "value_type": d.value_type,
        "group_id": d.group_id,
    }


def _def_from_doc(doc: dict) -> FeatureDefinition:
    return FeatureDefinition(
        name=doc["name"],
        version=doc["version"],
        generator_id=doc["generator_id"],
        params=doc.get("params", {}),
        dependencies=tuple(doc.get("dependencies", ())),
        value_type=doc.get("value_type", "numeric"),
        group_id=doc.get("group_id"),
    )


class FeatureCatalog:
    """Append-only catalog persisted at <data_root>/catalog.jsonl."""

    def __init__(self, path: Path | str | None = None):
        self._path = Path(path) if path is not None else None
        self._defs: dict[tuple[str, int], FeatureDefinition] = {}
        self._latest: dict[str, int] = {}
        self._lock = threading.RLock()
        if self._path is not None:
            for doc in read_jsonl(self._path):
                d = _def_from_doc(doc)
                self._defs[(d.name, d.version)] = d
                self._latest[d.name] = max(self._latest.get(d.name, 0), d.version)

    def __len__(self) -> int:
        return len(self._defs)

    def names(self) -> list[str]:
        return sorted(self._latest)

    def get(self, name: str, version: int | None = None) -> FeatureDefinition:
        with self._lock:
            if name not in self._latest:
                raise NotFoundError(f"unknown feature: {name}")
            v = self._latest[name] if version is None else version
            try:
                return self._defs[(name, v)]
            except KeyError:
                raise NotFoundError(f"unknown feature version: {name} v{version}") from None

    def latest_version(self, name: str) -> int:
        if name not in self._latest:
            raise NotFoundError(f"unknown feature: {name}")
        return self._latest[name]

    def _would_cycle(self, name: str, dependencies: Iterable[str]) -> bool:
        # DFS from each dependency through latest-version edges looking for `name`.
        stack = list(dependencies)
        seen: set[str] = set()
        while stack:
            current = stack.pop()
            if current == name:
                return True
            if current in seen:
                continue
            seen.add(current)
            if current in self._latest:
                stack.extend(self._defs[(current, self._latest[current])].dependencies)
        return False

    def register(self, draft: FeatureDefinition, known_generators: Iterable[str] | None = None) -> CatalogReceipt:
        """Idempotent on identical content; content changes bump the version."""
        with self._lock:
            if known_generators is not None and draft.generator_id not in set(known_generators):
                raise RegistrationError(f"unknown generator: {draft.generator_id}")
            for dep in draft.dependencies:
                if dep == draft.name:
                    raise CycleError(f"feature {draft.name} cannot depend on itself")
                if dep not in self._latest:
                    raise RegistrationError(f"unresolvable dependency: {dep}")
            if self._would_cycle(draft.name, draft.dependencies):
                raise CycleError(f"registering {draft.name} would create a dependency cycle")

            current = self._latest.get(draft.name)
            if current is not None:
                existing = self._defs[(draft.name, current)]
                if existing.content_key() == draft.content_key():
                    return CatalogReceipt(draft.name, current, created=False)
                version = current + 1
            else:
                version = 1

            final = FeatureDefinition(
                name=draft.name,
                version=version,
                generator_id=draft.generator_id,
                params=draft.params,
                dependencies=draft.dependencies,
                value_type=draft.value_type,
                group_id=draft.group_id,
            )
            self._defs[(final.name, final.version)] = final
            self._latest[final.name] = final.version
            if self._path is not None:
                append_jsonl(self._path, _def_to_doc(final))
            return CatalogReceipt(final.name, final.version, created=True)

    def search(self, query: str) -> list[FeatureDefinition]:
        """Case-insensitive substring match on name and generator_id."""
        q = query.lower()
        hits = [
            d
            for d in self._defs.values()
            if q in d.name.lower() or q in d.generator_id.lower()
        ]
        hits.sort(key=lambda d: (d.name, d.version))
        return hits

    def dependents_of(self, name: str) -> set[str]:
        """Direct dependents among latest versions."""
        out = set()
        for feat, v in self._latest.items():
            if name in self._defs[(feat, v)].dependencies:
                out.add(feat)
        return out

    def transitive_dependents(self, name: str) -> set[str]:
        if name not in self._latest:
            raise NotFoundError(f"unknown feature: {name}")
        affected = {name}
        frontier = [name]
        while frontier:
            current = frontier.pop()
            for dep in self.dependents_of(current):
                if dep not in affected:
                    affected.add(dep)
                    frontier.append(dep)
        return affected

    def closure(self, names: Iterable[str]) -> set[str]:
        """Names plus all transitively required dependencies."""
        out: set[str] = set()
        frontier = list(names)
        while frontier:
            current = frontier.pop()
            if current in out:
                continue
            out.add(current)
            frontier.extend(self.get(current).dependencies)
        return out
