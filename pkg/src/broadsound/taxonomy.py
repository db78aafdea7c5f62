"""Two-level sound taxonomy: loading, validation, and hierarchy queries.

The taxonomy is config-driven (YAML). The shipped default covers the
broad sound hierarchy used by the BSD10k dataset: 5 top-level classes
(Music, Instrument samples, Speech, Sound effects, Soundscapes) and 23
second-level classes. Class codes are lowercase ASCII slugs derived
from the display names and act as the stable keys everywhere else in
the package.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import yaml

from broadsound.errors import TaxonomyError

DEFAULT_TAXONOMY_RESOURCE = "bst_taxonomy.yaml"

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    """Lowercase ASCII slug of a display name ("Instrument samples" -> "instrument-samples")."""
    slug = _SLUG_RE.sub("-", name.lower()).strip("-")
    if not slug:
        raise TaxonomyError(f"cannot derive a slug from name {name!r}")
    return slug


class Level(enum.Enum):
    TOP = "top"
    SECOND = "second"


@dataclass(frozen=True)
class ClassNode:
    code: str
    name: str
    level: Level
    parent_code: str | None = None


@dataclass(frozen=True)
class Taxonomy:
    """Immutable, validated class hierarchy. Safe for concurrent reads."""

    nodes: tuple[ClassNode, ...]
    version: str
    _by_code: dict[str, ClassNode] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_code", {n.code: n for n in self.nodes})

    @property
    def top_nodes(self) -> list[ClassNode]:
        return [n for n in self.nodes if n.level is Level.TOP]

    @property
    def second_nodes(self) -> list[ClassNode]:
        return [n for n in self.nodes if n.level is Level.SECOND]

    def node(self, code: str) -> ClassNode:
        try:
            return self._by_code[code]
        except KeyError:
            raise TaxonomyError(f"unknown class code {code!r}") from None

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def codes(self, level: Level) -> list[str]:
        return [n.code for n in self.nodes if n.level is level]

    def children_of(self, top_code: str) -> list[ClassNode]:
        node = self.node(top_code)
        if node.level is not Level.TOP:
            raise TaxonomyError(f"{top_code!r} is not a top-level code")
        return [n for n in self.second_nodes if n.parent_code == top_code]

    def parent_of(self, code: str) -> str:
        """Top parent of a second-level code; identity on top-level codes."""
        node = self.node(code)
        if node.level is Level.TOP:
            return code
        assert node.parent_code is not None
        return node.parent_code

    def collapse_labels(self, labels: Sequence[str]) -> list[str]:
        """Element-wise parent_of; unknown codes are reported with their position."""
        out = []
        for i, code in enumerate(labels):
            if code not in self._by_code:
                raise TaxonomyError(f"unknown class code {code!r} at position {i}")
            out.append(self.parent_of(code))
        return out

    def validate_labels(self, labels: Iterable[str], level: Level) -> None:
        for i, code in enumerate(labels):
            node = self._by_code.get(code)
            if node is None:
                raise TaxonomyError(f"unknown class code {code!r} at position {i}")
            if node.level is not level:
                raise TaxonomyError(
                    f"code {code!r} at position {i} is {node.level.value}-level, "
                    f"expected {level.value}-level"
                )


def _parse_entry(entry, context: str) -> tuple[str, str]:
    if not isinstance(entry, dict) or "name" not in entry:
        raise TaxonomyError(f"malformed {context} entry: {entry!r}")
    name = str(entry["name"])
    code = str(entry.get("code") or slugify(name))
    return code, name


def load_taxonomy(config_text: str) -> Taxonomy:
    """Parse and validate a taxonomy config document.

    Schema: a mapping with ``version`` and ``top``, where ``top`` is a list
    of ``{code, name, children: [{code, name}]}`` entries. ``code`` may be
    omitted, in which case it is slugified from ``name``.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise TaxonomyError(f"taxonomy config does not parse: {exc}") from exc
    if not isinstance(doc, dict) or "top" not in doc:
        raise TaxonomyError("taxonomy config must be a mapping with a 'top' list")
    version = str(doc.get("version", "0"))
    tops = doc["top"]
    if not isinstance(tops, list) or not tops:
        raise TaxonomyError("'top' must be a non-empty list")

    parsed = []
    for top_entry in tops:
        code, name = _parse_entry(top_entry, "top-level")
        children = top_entry.get("children")
        if not isinstance(children, list) or not children:
            raise TaxonomyError(f"top-level class {code!r} has no children")
        parsed.append((code, name, children))
    top_codes = {code for code, _, _ in parsed}

    nodes: list[ClassNode] = []
    seen: set[str] = set()
    for code, name, children in parsed:
        if code in seen:
            raise TaxonomyError(f"duplicate class code {code!r}")
        seen.add(code)
        nodes.append(ClassNode(code=code, name=name, level=Level.TOP))
        for child_entry in children:
            ccode, cname = _parse_entry(child_entry, "second-level")
            if ccode in seen:
                raise TaxonomyError(f"duplicate class code {ccode!r}")
            seen.add(ccode)
            # children may carry an explicit parent; it must resolve
            parent = child_entry.get("parent", code)
            if parent not in top_codes:
                raise TaxonomyError(
                    f"dangling parent reference {parent!r} for class {ccode!r}"
                )
            if parent != code:
                raise TaxonomyError(
                    f"class {ccode!r} declares parent {parent!r} but is nested "
                    f"under {code!r}"
                )
            nodes.append(
                ClassNode(code=ccode, name=cname, level=Level.SECOND, parent_code=code)
            )

    return Taxonomy(nodes=tuple(nodes), version=version)


def dump_taxonomy(taxonomy: Taxonomy) -> str:
    """Serialize back to the config schema; load(dump(t)) == t."""
    doc = {
        "version": taxonomy.version,
        "top": [
            {
                "code": top.code,
                "name": top.name,
                "children": [
                    {"code": c.code, "name": c.name}
                    for c in taxonomy.children_of(top.code)
                ],
            }
            for top in taxonomy.top_nodes
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


def load_default_taxonomy() -> Taxonomy:
    """The taxonomy shipped with the package (5 top / 23 second classes)."""
    text = (
        resources.files("broadsound")
        .joinpath("data", DEFAULT_TAXONOMY_RESOURCE)
        .read_text(encoding="utf-8")
    )
    return load_taxonomy(text)
