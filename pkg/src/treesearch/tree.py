"""Arena-backed search tree of partial completions."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .lm import Vocabulary

NodeId = int


class NodeStatus(str, enum.Enum):
    OPEN = "open-leaf"
    EXPANDED = "expanded"
    TERMINAL = "terminal"
    NON_VIABLE = "non-viable"


class TreeError(Exception):
    """Bad node handle or illegal lifecycle transition."""


class TreeFormatError(ValueError):
    """Malformed tree document; ``location`` points at the offending field."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(slots=True)
class Node:
    id: NodeId
    token_id: int | None
    parent: NodeId | None
    depth: int
    token_logprob: float = 0.0
    status: NodeStatus = NodeStatus.OPEN
    children: list[NodeId] = field(default_factory=list)
    # log-domain confidence, assigned once by the search engine
    score: float | None = None


class SearchTree:
    """Nodes live in a list indexed by their id; the root is always id 0.

    The prompt is stored once on the tree. Depth counts generated tokens, so
    the root has depth 0.
    """

    def __init__(self, prompt: Sequence[int], vocabulary: Vocabulary):
        vocabulary.check_ids(prompt)
        self.prompt: tuple[int, ...] = tuple(int(t) for t in prompt)
        self.vocabulary = vocabulary
        self.nodes: list[Node] = [Node(0, None, None, 0, score=0.0)]
        # insertion-ordered, so iteration is in id order
        self._open: dict[NodeId, None] = {0: None}

    root: NodeId = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SearchTree):
            return NotImplemented
        return (
            self.prompt == other.prompt
            and self.vocabulary == other.vocabulary
            and self.nodes == other.nodes
        )

    def node(self, node_id: NodeId) -> Node:
        if isinstance(node_id, bool) or not isinstance(node_id, int) or not 0 <= node_id < len(self.nodes):
            raise TreeError(f"unknown node {node_id!r}")
        return self.nodes[node_id]

    def add_child(self, parent: NodeId, token_id: int, token_logprob: float) -> NodeId:
        p = self.node(parent)
        if p.status not in (NodeStatus.OPEN, NodeStatus.EXPANDED):
            raise TreeError(f"cannot extend node {parent} with status {p.status.value}")
        if not token_logprob <= 0.0:
            raise ValueError(f"token logprob must be <= 0, got {token_logprob!r}")
        self.vocabulary.check_ids([token_id])
        child_id = len(self.nodes)
        status = NodeStatus.TERMINAL if token_id == self.vocabulary.eos_id else NodeStatus.OPEN
        self.nodes.append(Node(child_id, int(token_id), parent, p.depth + 1, float(token_logprob), status))
        p.children.append(child_id)
        if p.status is NodeStatus.OPEN:
            p.status = NodeStatus.EXPANDED
            del self._open[parent]
        if status is NodeStatus.OPEN:
            self._open[child_id] = None
        return child_id

    def _close(self, node_id: NodeId, status: NodeStatus) -> None:
        n = self.node(node_id)
        if n.status is not NodeStatus.OPEN:
            raise TreeError(f"node {node_id} is {n.status.value}, only open leaves can change status")
        n.status = status
        del self._open[node_id]

    def mark_non_viable(self, node_id: NodeId) -> None:
        self._close(node_id, NodeStatus.NON_VIABLE)

    def mark_terminal(self, node_id: NodeId) -> None:
        self._close(node_id, NodeStatus.TERMINAL)

    def open_leaves(self) -> list[NodeId]:
        return list(self._open)

    def generated_tokens(self, node_id: NodeId) -> list[int]:
        """Token ids on the root-to-node path, excluding the prompt."""
        out = []
        n = self.node(node_id)
        while n.parent is not None:
            out.append(n.token_id)
            n = self.nodes[n.parent]
        out.reverse()
        return out

    def path_tokens(self, node_id: NodeId) -> list[int]:
        return list(self.prompt) + self.generated_tokens(node_id)

    def path_logprobs(self, node_id: NodeId) -> list[float]:
        out = []
        n = self.node(node_id)
        while n.parent is not None:
            out.append(n.token_logprob)
            n = self.nodes[n.parent]
        out.reverse()
        return out

    def nodes_with_status(self, status: NodeStatus) -> list[NodeId]:
        return [n.id for n in self.nodes if n.status is status]

    def audit(self) -> None:
        """Raise ``TreeError`` if any structural invariant is broken."""
        roots = [n.id for n in self.nodes if n.parent is None]
        if roots != [0]:
            raise TreeError(f"expected node 0 as the only root, found {roots}")
        links = 0
        for n in self.nodes:
            if n.parent is not None:
                p = self.nodes[n.parent]
                if n.id not in p.children:
                    raise TreeError(f"node {n.id} missing from children of {n.parent}")
                if n.depth != p.depth + 1:
                    raise TreeError(f"node {n.id} depth {n.depth}, parent depth {p.depth}")
                if n.parent >= n.id:
                    raise TreeError(f"node {n.id} has a later parent {n.parent}")
            if not n.token_logprob <= 0:
                raise TreeError(f"node {n.id} has positive logprob")
            for c in n.children:
                if self.nodes[c].parent != n.id:
                    raise TreeError(f"child {c} of {n.id} points elsewhere")
            links += len(n.children)
            if n.children and n.status is not NodeStatus.EXPANDED:
                raise TreeError(f"node {n.id} has children but status {n.status.value}")
            if not n.children and n.status is NodeStatus.EXPANDED:
                raise TreeError(f"node {n.id} is expanded without children")
        if len(self.nodes) != links + 1:
            raise TreeError("node count does not equal child-link count + 1")
        if list(self._open) != self.nodes_with_status(NodeStatus.OPEN):
            raise TreeError("open-leaf index out of sync")

    def to_dict(self) -> dict:
        return {
            "prompt": list(self.prompt),
            "vocab": list(self.vocabulary.tokens),
            "eos_id": self.vocabulary.eos_id,
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "token": n.token_id,
                    "logprob": n.token_logprob,
                    "depth": n.depth,
                    "status": n.status.value,
                    "score": n.score,
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, doc) -> "SearchTree":
        if not isinstance(doc, dict):
            raise TreeFormatError("$", "document must be an object")
        for key in ("prompt", "vocab", "nodes"):
            if key not in doc:
                raise TreeFormatError("$", f"missing field {key!r}")
        try:
            vocab = Vocabulary(tuple(doc["vocab"]), doc.get("eos_id"))
        except (ValueError, TypeError) as exc:
            raise TreeFormatError("$.vocab", str(exc)) from None
        try:
            tree = cls(doc["prompt"], vocab)
        except (ValueError, TypeError) as exc:
            raise TreeFormatError("$.prompt", str(exc)) from None
        raw = doc["nodes"]
        if not isinstance(raw, list) or not raw:
            raise TreeFormatError("$.nodes", "must be a non-empty list")

        nodes: list[Node] = []
        for i, item in enumerate(raw):
            loc = f"$.nodes[{i}]"
            if not isinstance(item, dict):
                raise TreeFormatError(loc, "node must be an object")
            try:
                status = NodeStatus(item["status"])
                node = Node(
                    id=item["id"],
                    token_id=item["token"],
                    parent=item["parent"],
                    depth=item["depth"],
                    token_logprob=float(item["logprob"]),
                    status=status,
                    score=None if item.get("score") is None else float(item["score"]),
                )
            except KeyError as exc:
                raise TreeFormatError(loc, f"missing field {exc.args[0]!r}") from None
            except (ValueError, TypeError) as exc:
                raise TreeFormatError(loc, str(exc)) from None
            if node.id != i:
                raise TreeFormatError(f"{loc}.id", f"expected dense id {i}, got {node.id!r}")
            if math.isnan(node.token_logprob) or node.token_logprob > 0:
                raise TreeFormatError(f"{loc}.logprob", "must be <= 0")
            nodes.append(node)

        for n in nodes:
            loc = f"$.nodes[{n.id}]"
            if n.parent is None:
                if n.id != 0:
                    raise TreeFormatError(f"{loc}.parent", "only node 0 may be the root")
                if n.token_id is not None or n.depth != 0:
                    raise TreeFormatError(loc, "root must have no token and depth 0")
                continue
            if not isinstance(n.parent, int) or not 0 <= n.parent < len(nodes):
                raise TreeFormatError(f"{loc}.parent", f"unknown parent {n.parent!r}")
            try:
                vocab.check_ids([n.token_id])
            except ValueError as exc:
                raise TreeFormatError(f"{loc}.token", str(exc)) from None
        if nodes[0].parent is not None:
            raise TreeFormatError("$.nodes[0].parent", "node 0 must be the root")

        # every parent chain must reach the root without revisiting a node
        reaches_root = {0}
        for n in nodes:
            seen = []
            cur = n
            while cur.id not in reaches_root:
                if cur.id in seen:
                    raise TreeFormatError(f"$.nodes[{n.id}].parent", "parent links form a cycle")
                seen.append(cur.id)
                cur = nodes[cur.parent]
            reaches_root.update(seen)

        for n in nodes:
            if n.parent is not None:
                nodes[n.parent].children.append(n.id)
        for n in nodes:
            loc = f"$.nodes[{n.id}]"
            if n.parent is not None and n.depth != nodes[n.parent].depth + 1:
                raise TreeFormatError(f"{loc}.depth", "depth must be parent depth + 1")
            if bool(n.children) != (n.status is NodeStatus.EXPANDED):
                raise TreeFormatError(f"{loc}.status", f"status {n.status.value} inconsistent with children")

        tree.nodes = nodes
        tree._open = {n.id: None for n in nodes if n.status is NodeStatus.OPEN}
        return tree


def serialize(tree: SearchTree) -> str:
    # json floats are written with repr, which round-trips exactly (<= 17 significant digits)
    return json.dumps(tree.to_dict(), separators=(",", ":"))


def deserialize(document: str) -> SearchTree:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return SearchTree.from_dict(doc)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(tree: SearchTree, name: str = "search_tree") -> str:
    """Graphviz rendering: one node per tree node labelled with token and linear score."""
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    toks = tree.vocabulary.tokens
    for n in tree.nodes:
        label = "<root>" if n.token_id is None else toks[n.token_id]
        score = "" if n.score is None else f"{math.exp(n.score):.4g}"
        attrs = [f'label="{_dot_escape(label)}\\n{score}"']
        if n.status is NodeStatus.NON_VIABLE:
            attrs.append("style=dashed")
        elif n.status is NodeStatus.TERMINAL:
            attrs.append("peripheries=2")
        lines.append(f"  n{n.id} [{', '.join(attrs)}];")
    for n in tree.nodes:
        for c in n.children:
            lines.append(f"  n{n.id} -> n{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"
