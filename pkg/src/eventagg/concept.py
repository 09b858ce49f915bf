"""Generalization hierarchies for summarizable features.

A concept tree is loaded from a plain-text indented outline: one concept
per line, depth given by indentation, optional bracketed predicates on
leaves that classify raw values:

    Port Number
      Reserved [0..1023]
      Deterministic [1024..49151]
      Dynamic [49152..65535]

``[lo..hi]`` is an inclusive integer interval; any other bracketed text is
a glob matched against the value's text form. A leaf may carry several
predicates. Trees are immutable after loading; all queries are read-only
and safe to run concurrently.
"""

from __future__ import annotations

import fnmatch
import math
import re
from dataclasses import dataclass
from typing import Iterable

from .model import FeatureValue, LogBase


class UnknownConcept(KeyError):
    """A queried concept label is not a node of the tree."""


class NoMatchingLeaf(ValueError):
    """A raw value falls outside every leaf predicate of the tree."""


_RANGE_RE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


@dataclass(frozen=True)
class _Range:
    lo: int
    hi: int

    def matches(self, value: FeatureValue) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and \
            self.lo <= value <= self.hi


@dataclass(frozen=True)
class _Glob:
    pattern: str

    def matches(self, value: FeatureValue) -> bool:
        if value is None:
            return False
        return fnmatch.fnmatchcase(str(value), self.pattern)


class ConceptTree:
    """A rooted generalization hierarchy over one feature's values."""

    def __init__(
        self,
        root: str,
        parent: dict[str, str],
        predicates: dict[str, tuple] = None,  # leaf label -> predicates
    ):
        self.root = root
        self.parent = dict(parent)
        self.predicates = {k: tuple(v) for k, v in (predicates or {}).items()}
        self.nodes = {root, *parent.keys()}
        self._check()
        self._children: dict[str, list[str]] = {n: [] for n in self.nodes}
        for child, par in parent.items():
            self._children[par].append(child)
        # Leaf-classification order follows the outline's document order,
        # which dict insertion order preserves.
        self._leaf_order = [n for n in self.predicates if n in self.nodes]
        self._depth: dict[str, int] = {}
        self._leaves: dict[str, int] = {}
        self._subsumers: dict[str, int] = {}
        for n in self.nodes:
            self._depth[n] = self._compute_depth(n)
            self._subsumers[n] = self._depth[n] + 1
        self._count_leaves(self.root)
        self.maxleaves = self._leaves[self.root]

    def _check(self) -> None:
        if self.root in self.parent:
            raise ValueError("root must not have a parent")
        for child, par in self.parent.items():
            if par not in self.nodes:
                raise ValueError(f"parent {par!r} of {child!r} is not a node")
        # acyclicity: walking up from any node must reach the root
        for n in self.nodes:
            seen = set()
            cur = n
            while cur != self.root:
                if cur in seen:
                    raise ValueError(f"cycle through {cur!r}")
                seen.add(cur)
                cur = self.parent[cur]
        self._check_disjoint_ranges()

    def _check_disjoint_ranges(self) -> None:
        ranges: list[tuple[int, int, str]] = []
        for label, preds in self.predicates.items():
            for p in preds:
                if isinstance(p, _Range):
                    ranges.append((p.lo, p.hi, label))
        ranges.sort()
        for (lo1, hi1, a), (lo2, _hi2, b) in zip(ranges, ranges[1:]):
            if lo2 <= hi1:
                raise ValueError(f"overlapping ranges on {a!r} and {b!r}")

    def _compute_depth(self, node: str) -> int:
        d = 0
        cur = node
        while cur != self.root:
            cur = self.parent[cur]
            d += 1
        return d

    def _count_leaves(self, node: str) -> int:
        kids = self._children[node]
        n = sum(self._count_leaves(k) for k in kids) if kids else 1
        self._leaves[node] = n
        return n

    # -- queries ---------------------------------------------------------

    def _require(self, concept: str) -> None:
        if concept not in self.nodes:
            raise UnknownConcept(concept)

    def depth(self, concept: str) -> int:
        self._require(concept)
        return self._depth[concept]

    def leaves(self, concept: str) -> int:
        """Number of leaves in the subtree rooted at ``concept``."""
        self._require(concept)
        return self._leaves[concept]

    def subsumers(self, concept: str) -> int:
        """Number of ancestors of ``concept`` including itself."""
        self._require(concept)
        return self._subsumers[concept]

    def children(self, concept: str) -> tuple[str, ...]:
        self._require(concept)
        return tuple(self._children[concept])

    def classify(self, value: FeatureValue) -> str:
        """Map a raw value onto a tree node.

        A text value equal to a node label is that node; otherwise the leaf
        predicates are tried in document order and the first match wins.
        """
        if isinstance(value, str) and value in self.nodes:
            return value
        for label in self._leaf_order:
            if any(p.matches(value) for p in self.predicates[label]):
                return label
        raise NoMatchingLeaf(f"{value!r} matches no leaf of {self.root!r}")

    def generalize(self, concept: str) -> str:
        """Parent of ``concept``; the root generalizes to itself."""
        self._require(concept)
        if concept == self.root:
            return concept
        return self.parent[concept]

    def ancestors_or_self(self, concept: str) -> list[str]:
        """Path from ``concept`` up to the root, inclusive."""
        self._require(concept)
        path = [concept]
        while path[-1] != self.root:
            path.append(self.parent[path[-1]])
        return path

    def lca(self, concepts: Iterable[str]) -> str:
        """Deepest node that is an ancestor-or-self of every given concept."""
        it = iter(concepts)
        try:
            first = next(it)
        except StopIteration:
            raise ValueError("lca of an empty concept set") from None
        common = ancestry = self.ancestors_or_self(first)
        common_set = set(ancestry)
        for c in it:
            common_set &= set(self.ancestors_or_self(c))
        for node in common:
            if node in common_set:
                return node
        return self.root

    def information_content(self, concept: str, log_base: LogBase = LogBase.E) -> float:
        """Information carried by a concept.

        Zero at the root and non-decreasing along every root-to-leaf path:
        fewer leaves below and more subsumers above both mean a more
        specific, more informative concept.
        """
        self._require(concept)
        ratio = (self._leaves[concept] / self._subsumers[concept] + 1) / (self.maxleaves + 1)
        return -_log(ratio, log_base)


def _log(x: float, base: LogBase) -> float:
    if base is LogBase.TWO:
        return math.log2(x)
    if base is LogBase.TEN:
        return math.log10(x)
    return math.log(x)


def _parse_predicate(text: str):
    m = _RANGE_RE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise ValueError(f"empty range [{text}]")
        return _Range(lo, hi)
    return _Glob(text)


def parse_outline(text: str, source: str = "<outline>") -> ConceptTree:
    """Parse the indented outline format into a ConceptTree."""
    root: str | None = None
    parent: dict[str, str] = {}
    predicates: dict[str, list] = {}
    stack: list[tuple[int, str]] = []  # (depth, label)
    indent_unit: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.lstrip(" ")
        spaces = len(line) - len(stripped)
        if "\t" in raw[: spaces + 1]:
            raise ValueError(f"{source}:{lineno}: tabs are not allowed in indentation")
        if spaces == 0:
            depth = 0
        else:
            if indent_unit is None:
                indent_unit = spaces
            if spaces % indent_unit:
                raise ValueError(f"{source}:{lineno}: inconsistent indentation")
            depth = spaces // indent_unit

        preds = re.findall(r"\[([^\]]*)\]", stripped)
        label = re.sub(r"\s*\[[^\]]*\]", "", stripped).strip()
        if not label:
            raise ValueError(f"{source}:{lineno}: concept label missing")

        if depth == 0:
            if root is not None:
                raise ValueError(f"{source}:{lineno}: more than one root")
            root = label
            stack = [(0, label)]
            continue
        if root is None:
            raise ValueError(f"{source}:{lineno}: indented line before the root")
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if not stack or stack[-1][0] != depth - 1:
            raise ValueError(f"{source}:{lineno}: indentation skips a level")
        if label in parent or label == root:
            raise ValueError(f"{source}:{lineno}: duplicate concept {label!r}")
        parent[label] = stack[-1][1]
        stack.append((depth, label))
        if preds:
            predicates[label] = [_parse_predicate(p) for p in preds]

    if root is None:
        raise ValueError(f"{source}: empty outline")
    return ConceptTree(root, parent, predicates)


def load_tree(path) -> ConceptTree:
    """Load a concept tree outline from a file path."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_outline(fh.read(), source=str(path))
