"""Categorical decision-tree induction over query components.

Splits maximize gain ratio (information gain over split information), one
branch per observed attribute value, no pruning, no numeric attributes.
Every node keeps its class-count distribution so inference can fall back on
it when classification meets an attribute value never seen at that node.
Trees render in the same textual grammar the index dumps use, and datasets
round-trip through ARFF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .model import Query, SuperPeerId

ATTRIBUTE_PREFIX = "composanteW"
CLASS_ATTRIBUTE = "class"
CLASS_PREFIX = "SP"


@dataclass(frozen=True)
class Instance:
    """One training row: rendered query components plus the answering
    super-peer."""

    attributes: tuple[str, ...]
    class_label: SuperPeerId


@dataclass(frozen=True)
class Leaf:
    counts: dict[SuperPeerId, int]


@dataclass(frozen=True)
class Node:
    attr_index: int
    branches: dict[str, "DecisionTree"]
    counts: dict[SuperPeerId, int]  # fallback distribution for unseen values


DecisionTree = Union[Leaf, Node]


@dataclass(frozen=True)
class ClassDistribution:
    probabilities: dict[SuperPeerId, float]
    support: int


def entropy(class_counts: Mapping[object, int]) -> float:
    """Shannon entropy in bits of a count distribution, with 0*log(0) = 0."""
    total = sum(class_counts.values())
    if total < 1:
        raise ValueError("entropy needs at least one counted instance")
    result = 0.0
    for count in class_counts.values():
        if count:
            p = count / total
            result -= p * math.log2(p)
    return result


def class_counts(instances: Iterable[Instance]) -> dict[SuperPeerId, int]:
    counts: dict[SuperPeerId, int] = {}
    for inst in instances:
        counts[inst.class_label] = counts.get(inst.class_label, 0) + 1
    return counts


def _partition(instances: Sequence[Instance], attr_index: int) -> dict[str, list[Instance]]:
    parts: dict[str, list[Instance]] = {}
    for inst in instances:
        parts.setdefault(inst.attributes[attr_index], []).append(inst)
    return parts


def information_gain(instances: Sequence[Instance], attr_index: int) -> float:
    """Parent entropy minus the size-weighted entropy of the value partitions."""
    if not instances:
        raise ValueError("no instances")
    total = len(instances)
    gain = entropy(class_counts(instances))
    for part in _partition(instances, attr_index).values():
        gain -= len(part) / total * entropy(class_counts(part))
    return gain


def split_information(instances: Sequence[Instance], attr_index: int) -> float:
    """Entropy of the attribute's value distribution itself."""
    if not instances:
        raise ValueError("no instances")
    sizes = {value: len(part) for value, part in _partition(instances, attr_index).items()}
    return entropy(sizes)


def gain_ratio(instances: Sequence[Instance], attr_index: int) -> float:
    """Information gain normalized by split information; 0 when the attribute
    takes a single value."""
    si = split_information(instances, attr_index)
    if si == 0.0:
        return 0.0
    return information_gain(instances, attr_index) / si


def build_tree(instances: Sequence[Instance], attrs: Sequence[int] | None = None,
               min_leaf: int = 1) -> DecisionTree:
    """Induce a tree: leaf when pure, out of attributes, or below min_leaf;
    otherwise split on the gain-ratio-maximizing attribute (ties to the lowest
    index) with one branch per observed value, never reusing an attribute on
    a path."""
    if not instances:
        raise ValueError("cannot induce a tree from zero instances")
    if attrs is None:
        attrs = tuple(range(len(instances[0].attributes)))
    else:
        attrs = tuple(attrs)
    counts = class_counts(instances)
    if len(counts) == 1 or not attrs or len(instances) < min_leaf:
        return Leaf(counts)

    best_attr = attrs[0]
    best_ratio = -1.0
    for attr_index in sorted(attrs):
        ratio = gain_ratio(instances, attr_index)
        if ratio > best_ratio:
            best_attr, best_ratio = attr_index, ratio

    remaining = tuple(a for a in attrs if a != best_attr)
    branches = {
        value: build_tree(part, remaining, min_leaf)
        for value, part in sorted(_partition(instances, best_attr).items())
    }
    return Node(attr_index=best_attr, branches=branches, counts=counts)


def _normalize(counts: Mapping[SuperPeerId, int]) -> ClassDistribution:
    total = sum(counts.values())
    return ClassDistribution(
        probabilities={label: count / total for label, count in counts.items() if count},
        support=total,
    )


def classify_traced(tree: DecisionTree, attributes: Sequence[str]) -> tuple[ClassDistribution, int]:
    """Classify and also report how many tree nodes the walk visited."""
    node = tree
    visits = 1
    while isinstance(node, Node):
        if node.attr_index >= len(attributes):
            raise ValueError(
                f"{len(attributes)} attribute values given but the tree tests "
                f"{ATTRIBUTE_PREFIX}{node.attr_index + 1}"
            )
        child = node.branches.get(attributes[node.attr_index])
        if child is None:
            # Value never observed at this node during training.
            return _normalize(node.counts), visits
        node = child
        visits += 1
    return _normalize(node.counts), visits


def classify(tree: DecisionTree, attributes: Sequence[str]) -> ClassDistribution:
    distribution, _ = classify_traced(tree, attributes)
    return distribution


def predict(tree: DecisionTree, attributes: Sequence[str]) -> SuperPeerId:
    """Single-label prediction: the most probable class, ties to the lowest
    label."""
    distribution = classify(tree, attributes)
    best = max(distribution.probabilities.values())
    return min(label for label, p in distribution.probabilities.items() if p == best)


def relevant_sps(tree: DecisionTree, query: Query) -> set[SuperPeerId]:
    """Super-peers with nonzero probability of answering the query."""
    attributes = tuple(c.render() for c in query.components)
    distribution = classify(tree, attributes)
    return {label for label, p in distribution.probabilities.items() if p > 0}


def training_accuracy(tree: DecisionTree, instances: Sequence[Instance]) -> float:
    if not instances:
        raise ValueError("no instances")
    correct = sum(1 for inst in instances if predict(tree, inst.attributes) == inst.class_label)
    return correct / len(instances)


def _majority(counts: Mapping[SuperPeerId, int]) -> SuperPeerId:
    best = max(counts.values())
    return min(label for label, count in counts.items() if count == best)


def _leaf_text(counts: Mapping[SuperPeerId, int]) -> str:
    total = sum(counts.values())
    majority = _majority(counts)
    wrong = total - counts[majority]
    if wrong:
        return f"{CLASS_PREFIX}{majority} ({total}.0/{wrong}.0)"
    return f"{CLASS_PREFIX}{majority} ({total}.0)"


def render_tree(tree: DecisionTree) -> str:
    """Plain-text rendering, one line per node.

    Child depth is marked by a leading "| " per level; a leaf line ends with
    ": CLASS (total.0)" or ": CLASS (total.0/incorrect.0)" where incorrect is
    the count of non-majority instances at the leaf.
    """
    if isinstance(tree, Leaf):
        return f": {_leaf_text(tree.counts)}"
    lines: list[str] = []
    _render(tree, 0, lines)
    return "\n".join(lines)


def _render(node: Node, depth: int, lines: list[str]) -> None:
    prefix = "| " * depth
    name = f"{ATTRIBUTE_PREFIX}{node.attr_index + 1}"
    for value in sorted(node.branches):
        child = node.branches[value]
        if isinstance(child, Leaf):
            lines.append(f"{prefix}{name} = {value}: {_leaf_text(child.counts)}")
        else:
            lines.append(f"{prefix}{name} = {value}")
            _render(child, depth + 1, lines)


class ArffError(ValueError):
    """Malformed ARFF input; message carries the line number."""


def arff_export(instances: Sequence[Instance], relation_name: str,
                n_attributes: int | None = None) -> str:
    """Standard nominal-attribute ARFF with one composanteW<i> attribute per
    query component and the answering super-peer as the class."""
    if n_attributes is None:
        n_attributes = len(instances[0].attributes) if instances else 0
    for inst in instances:
        if len(inst.attributes) != n_attributes:
            raise ValueError(
                f"inconsistent attribute count: expected {n_attributes}, "
                f"got {len(inst.attributes)}"
            )
    lines = [f"@relation {relation_name}", ""]
    for i in range(n_attributes):
        values = sorted({inst.attributes[i] for inst in instances})
        lines.append(f"@attribute {ATTRIBUTE_PREFIX}{i + 1} {{{','.join(values)}}}")
    labels = sorted({inst.class_label for inst in instances})
    class_values = ",".join(f"{CLASS_PREFIX}{label}" for label in labels)
    lines.append(f"@attribute {CLASS_ATTRIBUTE} {{{class_values}}}")
    lines.append("")
    lines.append("@data")
    for inst in instances:
        row = ",".join(inst.attributes) + ("," if inst.attributes else "")
        lines.append(f"{row}{CLASS_PREFIX}{inst.class_label}")
    return "\n".join(lines) + "\n"


def arff_import(text: str) -> list[Instance]:
    """Parse ARFF produced by arff_export; raises ArffError with the line
    number on malformed input."""
    attribute_values: list[tuple[str, set[str]]] = []
    instances: list[Instance] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        lowered = line.lower()
        if lowered.startswith("@relation"):
            continue
        if lowered.startswith("@attribute"):
            if in_data:
                raise ArffError(f"line {lineno}: @attribute after @data")
            rest = line[len("@attribute"):].strip()
            name, _, domain = rest.partition(" ")
            domain = domain.strip()
            if not name or not (domain.startswith("{") and domain.endswith("}")):
                raise ArffError(f"line {lineno}: expected '@attribute name {{v1,...}}'")
            values = {v.strip() for v in domain[1:-1].split(",") if v.strip()}
            attribute_values.append((name, values))
            continue
        if lowered.startswith("@data"):
            if not attribute_values:
                raise ArffError(f"line {lineno}: @data before any @attribute")
            in_data = True
            continue
        if not in_data:
            raise ArffError(f"line {lineno}: unexpected content outside @data: {raw!r}")
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(attribute_values):
            raise ArffError(
                f"line {lineno}: expected {len(attribute_values)} fields, got {len(fields)}"
            )
        for value, (name, allowed) in zip(fields, attribute_values):
            if allowed and value not in allowed:
                raise ArffError(f"line {lineno}: value {value!r} not declared for {name}")
        label_text = fields[-1]
        if not label_text.startswith(CLASS_PREFIX) or not label_text[len(CLASS_PREFIX):].isdigit():
            raise ArffError(f"line {lineno}: class label {label_text!r} is not {CLASS_PREFIX}<n>")
        instances.append(Instance(
            attributes=tuple(fields[:-1]),
            class_label=int(label_text[len(CLASS_PREFIX):]),
        ))
    return instances
