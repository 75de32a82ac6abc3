"""
Finite Kripke models, pointed models and example sets.

Also builds the bounded universes of tree models (optionally with the two
one-point loops grafted in) that the enumeration-based operations run on.
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx

from .config import SETTINGS
from .errors import ModelError, ResourceLimitExceeded

logger = logging.getLogger(__name__)

# Heights are naturals or math.inf
ExtendedNat = Union[int, float]


@dataclass(frozen=True)
class KripkeModel:
    """A finite Kripke model over an ambient proposition set."""

    worlds: Tuple[str, ...]
    relation: FrozenSet[Tuple[str, str]]
    valuation: Tuple[Tuple[str, FrozenSet[str]], ...]
    props: FrozenSet[str]

    def __post_init__(self):
        worlds = tuple(sorted(set(self.worlds)))
        if not worlds:
            raise ModelError("A model needs at least one world")
        known = set(worlds)
        relation = frozenset((s, t) for s, t in self.relation)
        for s, t in relation:
            if s not in known or t not in known:
                raise ModelError(f"Edge ({s}, {t}) leaves the world set")

        labels = dict(self.valuation)
        if set(labels) - known:
            raise ModelError(f"Valuation names unknown worlds {sorted(set(labels) - known)}")
        props = frozenset(self.props)
        valuation = []
        for w in worlds:
            label = frozenset(labels.get(w, ()))
            if not label <= props:
                raise ModelError(f"World {w} uses propositions {sorted(label - props)} outside {sorted(props)}")
            valuation.append((w, label))

        object.__setattr__(self, "worlds", worlds)
        object.__setattr__(self, "relation", relation)
        object.__setattr__(self, "valuation", tuple(valuation))
        object.__setattr__(self, "props", props)

    @classmethod
    def build(
        cls,
        worlds: Iterable[str],
        relation: Iterable[Tuple[str, str]],
        valuation: Mapping[str, Iterable[str]],
        props: Optional[Iterable[str]] = None,
    ) -> "KripkeModel":
        """Build a model; props defaults to the propositions the valuation uses."""
        labels = {w: frozenset(v) for w, v in valuation.items()}
        if props is None:
            ambient = frozenset().union(*labels.values())
        else:
            ambient = frozenset(props)
        return cls(tuple(worlds), frozenset(relation), tuple(labels.items()), ambient)

    @cached_property
    def _successor_map(self) -> Dict[str, Tuple[str, ...]]:
        succ: Dict[str, List[str]] = {w: [] for w in self.worlds}
        for s, t in self.relation:
            succ[s].append(t)
        return {w: tuple(sorted(ts)) for w, ts in succ.items()}

    @cached_property
    def _label_map(self) -> Dict[str, FrozenSet[str]]:
        return dict(self.valuation)

    def successors(self, world: str) -> Tuple[str, ...]:
        return self._successor_map[world]

    def label(self, world: str) -> FrozenSet[str]:
        return self._label_map[world]

    def to_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for w in self.worlds:
            graph.add_node(w, label=self.label(w))
        graph.add_edges_from(self.relation)
        return graph

    def with_props(self, props: Iterable[str]) -> "KripkeModel":
        return KripkeModel(self.worlds, self.relation, self.valuation, frozenset(props))

    def map_labels(
        self, fn: Callable[[FrozenSet[str]], Iterable[str]], props: Optional[Iterable[str]] = None
    ) -> "KripkeModel":
        """Apply fn to every valuation entry."""
        valuation = tuple((w, frozenset(fn(label))) for w, label in self.valuation)
        return KripkeModel(
            self.worlds,
            self.relation,
            valuation,
            frozenset(props) if props is not None else self.props,
        )


@dataclass(frozen=True)
class PointedModel:
    model: KripkeModel
    point: str

    def __post_init__(self):
        if self.point not in self.model._label_map:
            raise ModelError(f"Point {self.point} is not a world of the model")

    @property
    def props(self) -> FrozenSet[str]:
        return self.model.props

    @property
    def size(self) -> int:
        return len(self.model.worlds)

    def with_props(self, props: Iterable[str]) -> "PointedModel":
        return PointedModel(self.model.with_props(props), self.point)

    def __str__(self) -> str:
        return dumps_model(self)


@dataclass(frozen=True)
class ExampleSet:
    """Positive and negative pointed models over a common proposition set."""

    props: Tuple[str, ...]
    positive: Tuple[PointedModel, ...] = field(default=())
    negative: Tuple[PointedModel, ...] = field(default=())

    def __post_init__(self):
        props = tuple(sorted(set(self.props)))
        ambient = frozenset(props)
        normalized = []
        for side in (self.positive, self.negative):
            models = []
            for m in side:
                used = frozenset().union(*(label for _, label in m.model.valuation))
                if not used <= ambient:
                    raise ModelError(
                        f"Example uses propositions {sorted(used - ambient)} outside {list(props)}"
                    )
                models.append(m if m.props == ambient else m.with_props(ambient))
            normalized.append(tuple(models))
        object.__setattr__(self, "props", props)
        object.__setattr__(self, "positive", normalized[0])
        object.__setattr__(self, "negative", normalized[1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "props": list(self.props),
            "positive": [model_to_dict(m, with_props=False) for m in self.positive],
            "negative": [model_to_dict(m, with_props=False) for m in self.negative],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExampleSet":
        if not isinstance(data, Mapping):
            raise ModelError("Example set must be a JSON object")
        for key in ("props", "positive", "negative"):
            if key not in data:
                raise ModelError(f"Example set lacks '{key}'")
        props = tuple(data["props"])
        return cls(
            props,
            tuple(model_from_dict(m, props) for m in data["positive"]),
            tuple(model_from_dict(m, props) for m in data["negative"]),
        )


# --- building blocks -------------------------------------------------------


def single_point(label: Iterable[str], props: Optional[Iterable[str]] = None) -> PointedModel:
    """The one-world model without successors whose valuation is label."""
    label = frozenset(label)
    ambient = frozenset(props) if props is not None else label
    return PointedModel(KripkeModel(("w0",), frozenset(), (("w0", label),), ambient), "w0")


def reflexive_point(label: Iterable[str], props: Optional[Iterable[str]] = None) -> PointedModel:
    """The one-world model with a self-loop whose valuation is label."""
    label = frozenset(label)
    ambient = frozenset(props) if props is not None else label
    return PointedModel(
        KripkeModel(("w0",), frozenset([("w0", "w0")]), (("w0", label),), ambient), "w0"
    )


def chain(length: int, props: Iterable[str] = (), label: Iterable[str] = ()) -> PointedModel:
    """A path w0 -> w1 -> ... of the given length, every world labelled alike."""
    worlds = tuple(f"w{i}" for i in range(length + 1))
    relation = frozenset((worlds[i], worlds[i + 1]) for i in range(length))
    label = frozenset(label)
    model = KripkeModel(
        worlds, relation, tuple((w, label) for w in worlds), frozenset(props) | label
    )
    return PointedModel(model, "w0")


def height(m: PointedModel) -> ExtendedNat:
    """Longest path length from the point, math.inf when a cycle is reachable."""
    graph = m.model.to_graph()
    reachable = nx.descendants(graph, m.point) | {m.point}
    sub = graph.subgraph(reachable)
    if not nx.is_directed_acyclic_graph(sub):
        return math.inf
    return nx.dag_longest_path_length(sub)


def reachable_part(m: PointedModel) -> PointedModel:
    graph = m.model.to_graph()
    keep = nx.descendants(graph, m.point) | {m.point}
    model = KripkeModel(
        tuple(keep),
        frozenset((s, t) for s, t in m.model.relation if s in keep),
        tuple((w, m.model.label(w)) for w in keep),
        m.props,
    )
    return PointedModel(model, m.point)


def truncate(m: PointedModel, depth: int, max_worlds: Optional[int] = None) -> PointedModel:
    """
    Unravel m into a tree and cut it at the given depth.

    Args:
        m: Pointed model to unravel
        depth: Maximal path length kept
        max_worlds: Budget on the tree size

    Returns:
        Tree model agreeing with m on every formula of modal depth <= depth
    """
    if max_worlds is None:
        max_worlds = SETTINGS["max_worlds"]
    worlds = ["w0"]
    origin = {"w0": m.point}
    labels = {"w0": m.model.label(m.point)}
    relation = []
    queue = deque([("w0", 0)])
    while queue:
        node, level = queue.popleft()
        if level == depth:
            continue
        for succ in m.model.successors(origin[node]):
            if len(worlds) >= max_worlds:
                raise ResourceLimitExceeded("worlds", max_worlds)
            child = f"w{len(worlds)}"
            worlds.append(child)
            origin[child] = succ
            labels[child] = m.model.label(succ)
            relation.append((node, child))
            queue.append((child, level + 1))
    model = KripkeModel(tuple(worlds), frozenset(relation), tuple(labels.items()), m.props)
    return PointedModel(model, "w0")


# --- JSON ------------------------------------------------------------------


def model_to_dict(m: PointedModel, with_props: bool = True) -> Dict[str, Any]:
    """Canonical JSON object: sorted worlds, edges and valuation entries."""
    data: Dict[str, Any] = {
        "worlds": list(m.model.worlds),
        "relation": [list(edge) for edge in sorted(m.model.relation)],
        "valuation": {w: sorted(label) for w, label in m.model.valuation},
        "point": m.point,
    }
    used = frozenset().union(*(label for _, label in m.model.valuation))
    if with_props and used != m.props:
        data["props"] = sorted(m.props)
    return data


def model_from_dict(data: Mapping[str, Any], props: Optional[Iterable[str]] = None) -> PointedModel:
    """
    Read a model object; the ambient set is the union of the optional "props"
    key, the given props and every proposition the valuation uses.
    """
    if not isinstance(data, Mapping):
        raise ModelError("Model must be a JSON object")
    for key in ("worlds", "relation", "valuation", "point"):
        if key not in data:
            raise ModelError(f"Model lacks '{key}'")
    try:
        relation = [(str(s), str(t)) for s, t in data["relation"]]
    except (TypeError, ValueError):
        raise ModelError("Relation must be a list of [source, target] pairs") from None
    if not isinstance(data["valuation"], Mapping):
        raise ModelError("Valuation must map worlds to lists of propositions")
    valuation: Dict[str, FrozenSet[str]] = {}
    for w, label in data["valuation"].items():
        if not isinstance(label, list):
            raise ModelError(f"Label of world '{w}' must be a list of propositions")
        valuation[str(w)] = frozenset(str(p) for p in label)
    worlds = [str(w) for w in data["worlds"]]
    if set(valuation) != set(worlds):
        raise ModelError("Valuation must be defined exactly on the worlds")
    ambient = frozenset(data.get("props", ())) | frozenset(props or ())
    for label in valuation.values():
        ambient |= label
    model = KripkeModel(tuple(worlds), frozenset(relation), tuple(valuation.items()), ambient)
    return PointedModel(model, str(data["point"]))


def dumps_model(m: PointedModel) -> str:
    return json.dumps(model_to_dict(m), separators=(",", ":"))


def model_sort_key(m: PointedModel) -> Tuple[int, str]:
    """Smaller models first, ties broken by canonical serialization."""
    return (m.size, dumps_model(m))


def _read_json(path: Union[str, Path]) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ModelError(f"File not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ModelError(f"Malformed JSON in {path}: {e}") from None


def load_model(path: Union[str, Path], props: Optional[Iterable[str]] = None) -> PointedModel:
    return model_from_dict(_read_json(path), props)


def save_model(m: PointedModel, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(m), f, indent=2)
        f.write("\n")


def load_example_set(path: Union[str, Path]) -> ExampleSet:
    return ExampleSet.from_dict(_read_json(path))


def save_example_set(e: ExampleSet, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(e.to_dict(), f, indent=2)
        f.write("\n")
    logger.info(f"Wrote {len(e.positive)}+{len(e.negative)} examples to {path}")


# --- bounded universes -----------------------------------------------------


def _valuations(props: Sequence[str]) -> List[FrozenSet[str]]:
    result = []
    for r in range(len(props) + 1):
        for combo in combinations(props, r):
            result.append(frozenset(combo))
    return result


def _capped_pow2(exponent: int, cap: int) -> int:
    if exponent > cap.bit_length():
        return cap + 1
    return min(2**exponent, cap + 1)


def count_models(
    props: Iterable[str], max_depth: int, graft_loops: bool = False, cap: Optional[int] = None
) -> int:
    """
    Size of enumerate_models(props, max_depth, graft_loops) without building it.

    Returns:
        The exact count, or cap + 1 if it is larger than cap
    """
    if cap is None:
        cap = SETTINGS["max_models"]
    props = sorted(set(props))
    n_val = 2 ** len(props)
    if graft_loops:
        loops = 2 if props else 1
        count = loops
        for _ in range(max_depth + 1):
            count = min(loops + n_val * _capped_pow2(count, cap) - loops, cap + 1)
    else:
        count = n_val
        for _ in range(max_depth):
            count = min(n_val * _capped_pow2(count, cap), cap + 1)
    return count


class _TypeSpace:
    """Interned tree types (label, child type ids) with the two loop types."""

    def __init__(self, props: Sequence[str], graft_loops: bool):
        self.props = tuple(props)
        self.types: List[Tuple[FrozenSet[str], FrozenSet[int]]] = []
        self.index: Dict[Tuple[FrozenSet[str], FrozenSet[int]], int] = {}
        self.loops: List[int] = []
        if graft_loops:
            for label in dict.fromkeys([frozenset(), frozenset(props)]):
                tid = len(self.types)
                self.types.append((label, frozenset([tid])))
                self.loops.append(tid)

    def intern(self, label: FrozenSet[str], children: FrozenSet[int]) -> int:
        for loop in self.loops:
            if (label, children) == (self.types[loop][0], frozenset([loop])):
                return loop
        key = (label, children)
        if key not in self.index:
            self.index[key] = len(self.types)
            self.types.append(key)
        return self.index[key]

    def model_of(self, tid: int) -> PointedModel:
        names = {tid: "w0"}
        order = [tid]
        queue = deque([tid])
        while queue:
            current = queue.popleft()
            for child in sorted(self.types[current][1]):
                if child not in names:
                    names[child] = f"w{len(names)}"
                    order.append(child)
                    queue.append(child)
        relation = frozenset(
            (names[t], names[c]) for t in order for c in self.types[t][1]
        )
        valuation = tuple((names[t], self.types[t][0]) for t in order)
        model = KripkeModel(
            tuple(names[t] for t in order), relation, valuation, frozenset(self.props)
        )
        return PointedModel(model, "w0")


@lru_cache(maxsize=32)
def _enumerate(props: Tuple[str, ...], max_depth: int, graft_loops: bool) -> Tuple[PointedModel, ...]:
    space = _TypeSpace(props, graft_loops)
    valuations = _valuations(props)
    level: List[int] = list(space.loops) if graft_loops else []
    for depth in range(max_depth + 1):
        below = level
        level = list(space.loops)
        seen = set(level)
        for label in valuations:
            for r in range(len(below) + 1):
                for children in combinations(below, r):
                    tid = space.intern(label, frozenset(children))
                    if tid not in seen:
                        seen.add(tid)
                        level.append(tid)
        logger.debug(f"Depth {depth}: {len(level)} types")
    return tuple(space.model_of(tid) for tid in level)


def enumerate_models(
    props: Iterable[str],
    max_depth: int,
    graft_loops: bool = False,
    max_models: Optional[int] = None,
) -> Tuple[PointedModel, ...]:
    """
    One representative per bisimulation class of tree models of bounded depth.

    With graft_loops the one-point loops over the empty and the full
    valuation are available as extra subtrees at every level.

    Args:
        props: Ambient propositions
        max_depth: Maximal tree depth
        graft_loops: Whether to graft in the two loop models
        max_models: Budget on the universe size

    Returns:
        The models in deterministic order, pairwise non-bisimilar

    Raises:
        ResourceLimitExceeded: before any work if the universe is too large
    """
    if max_models is None:
        max_models = SETTINGS["max_models"]
    props = tuple(sorted(set(props)))
    needed = count_models(props, max_depth, graft_loops, cap=max_models)
    if needed > max_models:
        raise ResourceLimitExceeded("models", max_models)
    models = _enumerate(props, max_depth, graft_loops)
    logger.info(
        f"Universe over {list(props)} at depth {max_depth}"
        f"{' with loops' if graft_loops else ''}: {len(models)} models"
    )
    return models
