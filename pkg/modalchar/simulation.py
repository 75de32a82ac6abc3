"""
Bisimulation, simulation and weak simulation as greatest fixpoints.

All three start from the pairs allowed by the atom clause and delete pairs
that break the forth or back clause until nothing changes. Weak simulation
relaxes forth for source successors bisimilar to the empty-valuation loop
and back for target successors bisimilar to the full-valuation loop.

Witness pairs are (source world, target world); "target simulates source".
"""

import logging
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import (
    Any,
    Dict,
    FrozenSet,
    Hashable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from .config import SETTINGS
from .errors import ModelError, ResourceLimitExceeded, WitnessError
from .kripke import KripkeModel, PointedModel, reachable_part, reflexive_point

logger = logging.getLogger(__name__)

Pair = Tuple[str, str]


class SimKind(Enum):
    BISIMULATION = "bisimulation"
    SIMULATION = "simulation"
    WEAK = "weak-simulation"


@dataclass(frozen=True)
class SimWitness:
    kind: SimKind
    pairs: FrozenSet[Pair]
    source: PointedModel
    target: PointedModel

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "source_point": self.source.point,
            "target_point": self.target.point,
            "pairs": [list(pair) for pair in sorted(self.pairs)],
        }


def _atom_ok(kind: SimKind, source_label: FrozenSet[str], target_label: FrozenSet[str]) -> bool:
    if kind is SimKind.BISIMULATION:
        return source_label == target_label
    return source_label <= target_label


def _check_props(a: KripkeModel, b: KripkeModel) -> None:
    if a.props != b.props:
        raise ModelError(
            f"Models range over different propositions: {sorted(a.props)} vs {sorted(b.props)}"
        )


def _violates(
    s: str,
    t: str,
    source: KripkeModel,
    target: KripkeModel,
    relation: Set[Pair],
    source_escape: FrozenSet[str],
    target_escape: FrozenSet[str],
) -> bool:
    target_succ = target.successors(t)
    source_succ = source.successors(s)
    for s2 in source_succ:
        if s2 not in source_escape and not any((s2, t2) in relation for t2 in target_succ):
            return True
    for t2 in target_succ:
        if t2 not in target_escape and not any((s2, t2) in relation for s2 in source_succ):
            return True
    return False


def largest_relation(
    source: KripkeModel,
    target: KripkeModel,
    kind: SimKind,
    rng: Optional[random.Random] = None,
) -> FrozenSet[Pair]:
    """
    Largest relation of the given kind between two models.

    Args:
        source: Simulated model
        target: Simulating model
        kind: Clause set to enforce
        rng: If given, shuffles the order in which pairs are examined

    Returns:
        The greatest fixpoint as a set of (source, target) world pairs
    """
    _check_props(source, target)
    if kind is SimKind.WEAK:
        source_escape = loop_worlds(source, full=False)
        target_escape = loop_worlds(target, full=True)
    else:
        source_escape = target_escape = frozenset()

    relation = {
        (s, t)
        for s in source.worlds
        for t in target.worlds
        if _atom_ok(kind, source.label(s), target.label(t))
    }
    source_pred: Dict[str, List[str]] = {w: [] for w in source.worlds}
    for s, s2 in source.relation:
        source_pred[s2].append(s)
    target_pred: Dict[str, List[str]] = {w: [] for w in target.worlds}
    for t, t2 in target.relation:
        target_pred[t2].append(t)

    order = sorted(relation)
    if rng is not None:
        rng.shuffle(order)
    queue = deque(order)
    queued = set(order)
    while queue:
        pair = queue.popleft()
        queued.discard(pair)
        if pair not in relation:
            continue
        s, t = pair
        if _violates(s, t, source, target, relation, source_escape, target_escape):
            relation.discard(pair)
            for ps in source_pred[s]:
                for pt in target_pred[t]:
                    above = (ps, pt)
                    if above in relation and above not in queued:
                        queue.append(above)
                        queued.add(above)
    return frozenset(relation)


@lru_cache(maxsize=1024)
def loop_worlds(model: KripkeModel, full: bool) -> FrozenSet[str]:
    """Worlds bisimilar to the one-point loop with empty (or full) valuation."""
    loop = reflexive_point(model.props if full else (), props=model.props)
    relation = largest_relation(model, loop.model, SimKind.BISIMULATION)
    return frozenset(s for s, _ in relation)


def _witness(target: PointedModel, source: PointedModel, kind: SimKind) -> Optional[SimWitness]:
    relation = largest_relation(source.model, target.model, kind)
    if (source.point, target.point) not in relation:
        return None
    return SimWitness(kind, relation, source, target)


def bisimilar(a: PointedModel, b: PointedModel) -> Optional[SimWitness]:
    return _witness(b, a, SimKind.BISIMULATION)


def simulates(target: PointedModel, source: PointedModel) -> Optional[SimWitness]:
    """Witness that target simulates source, or None."""
    return _witness(target, source, SimKind.SIMULATION)


def weakly_simulates(target: PointedModel, source: PointedModel) -> Optional[SimWitness]:
    """Witness that target weakly simulates source, or None."""
    return _witness(target, source, SimKind.WEAK)


def identity_witness(m: PointedModel, kind: SimKind = SimKind.WEAK) -> SimWitness:
    return SimWitness(kind, frozenset((w, w) for w in m.model.worlds), m, m)


# --- independent checking --------------------------------------------------


def _reaches_bad(model: KripkeModel, world: str, label: FrozenSet[str]) -> bool:
    """True iff some world reachable from world has another label or is a dead end."""
    seen = {world}
    stack = [world]
    while stack:
        w = stack.pop()
        if model.label(w) != label or not model.successors(w):
            return True
        for w2 in model.successors(w):
            if w2 not in seen:
                seen.add(w2)
                stack.append(w2)
    return False


def verify_witness(w: SimWitness) -> bool:
    """
    Check a witness pair by pair, without running a fixpoint.

    Returns:
        True iff the point pair is related and every pair meets the clauses
        of the witness kind
    """
    source, target = w.source.model, w.target.model
    if source.props != target.props:
        return False
    if (w.source.point, w.target.point) not in w.pairs:
        return False
    empty, full = frozenset(), source.props
    for s, t in w.pairs:
        if s not in source.worlds or t not in target.worlds:
            return False
        if not _atom_ok(w.kind, source.label(s), target.label(t)):
            return False
        for s2 in source.successors(s):
            if w.kind is SimKind.WEAK and not _reaches_bad(source, s2, empty):
                continue
            if not any((s2, t2) in w.pairs for t2 in target.successors(t)):
                return False
        for t2 in target.successors(t):
            if w.kind is SimKind.WEAK and not _reaches_bad(target, t2, full):
                continue
            if not any((s2, t2) in w.pairs for s2 in source.successors(s)):
                return False
    return True


def compose_witnesses(z1: SimWitness, z2: SimWitness) -> SimWitness:
    """
    Relational composition of z1 (a to b) and z2 (b to c) into a witness a to c.

    Raises:
        WitnessError: on mismatched kinds or endpoints, or if the composite
            fails verification (possible only over an empty proposition set)
    """
    if z1.kind is not z2.kind:
        raise WitnessError(f"Cannot compose a {z1.kind.value} with a {z2.kind.value}")
    if z1.target != z2.source:
        raise WitnessError("The first witness does not end where the second starts")
    by_middle: Dict[str, List[str]] = {}
    for b, c in z2.pairs:
        by_middle.setdefault(b, []).append(c)
    pairs = frozenset((a, c) for a, b in z1.pairs for c in by_middle.get(b, ()))
    result = SimWitness(z1.kind, pairs, z1.source, z2.target)
    if not verify_witness(result):
        raise WitnessError("Composite relation is not a valid witness")
    return result


# --- quotients and preorders -----------------------------------------------


def minimize(m: PointedModel) -> PointedModel:
    """
    Quotient the reachable part of m by its largest auto-bisimulation.

    Worlds are renamed w0, w1, ... in breadth-first order from the point.
    """
    m = reachable_part(m)
    model = m.model
    relation = largest_relation(model, model, SimKind.BISIMULATION)
    block: Dict[str, str] = {}
    for w in model.worlds:
        block[w] = min(t for s, t in relation if s == w)

    names = {block[m.point]: "w0"}
    queue = deque([block[m.point]])
    while queue:
        rep = queue.popleft()
        for succ in sorted({block[s] for s in model.successors(rep)}):
            if succ not in names:
                names[succ] = f"w{len(names)}"
                queue.append(succ)
    edges = frozenset((names[block[s]], names[block[t]]) for s, t in model.relation)
    valuation = tuple((name, model.label(rep)) for rep, name in names.items())
    quotient = KripkeModel(tuple(names.values()), edges, valuation, model.props)
    return PointedModel(quotient, "w0")


class _Cyclic(Exception):
    pass


def _world_key(model: KripkeModel, w: str, memo: Dict[str, Hashable], visiting: Set[str]) -> Hashable:
    if w in memo:
        return memo[w]
    succ = model.successors(w)
    if succ == (w,):
        key: Hashable = ("loop", model.label(w))
    else:
        if w in visiting:
            raise _Cyclic()
        visiting.add(w)
        key = (model.label(w), frozenset(_world_key(model, c, memo, visiting) for c in succ))
        visiting.discard(w)
    memo[w] = key
    return key


def structural_key(m: PointedModel) -> Optional[Hashable]:
    """
    Hashable shape of m when its reachable part is a DAG whose only cycles
    are one-point loops; equal keys mean bisimilar models. None otherwise.
    """
    try:
        return _world_key(m.model, m.point, {}, set())
    except _Cyclic:
        return None


def _union(models: Sequence[PointedModel]) -> Tuple[KripkeModel, List[str]]:
    """Disjoint union in which structurally equal worlds are merged."""
    props = models[0].props
    names: Dict[Hashable, str] = {}
    labels: Dict[str, FrozenSet[str]] = {}
    edges: Set[Pair] = set()
    points = []
    for i, m in enumerate(models):
        if m.props != props:
            _check_props(models[0].model, m.model)
        memo: Dict[str, Hashable] = {}
        try:
            for w in m.model.worlds:
                _world_key(m.model, w, memo, set())
            local = {w: memo[w] for w in m.model.worlds}
        except _Cyclic:
            local = {w: ("model", i, w) for w in m.model.worlds}
        for w, key in local.items():
            if key not in names:
                names[key] = f"u{len(names)}"
                labels[names[key]] = m.model.label(w)
        for s, t in m.model.relation:
            edges.add((names[local[s]], names[local[t]]))
        points.append(names[local[m.point]])
    union = KripkeModel(tuple(labels), frozenset(edges), tuple(labels.items()), props)
    return union, points


@lru_cache(maxsize=16)
def _preorder(
    models: Tuple[PointedModel, ...], kind: SimKind, max_pairs: int
) -> FrozenSet[Tuple[int, int]]:
    union, points = _union(models)
    if len(union.worlds) ** 2 > max_pairs:
        raise ResourceLimitExceeded("pairs", max_pairs, len(union.worlds) ** 2)
    relation = largest_relation(union, union, kind)
    logger.debug(f"{kind.value} preorder on {len(models)} models ({len(union.worlds)} worlds)")
    return frozenset(
        (i, j)
        for i, p in enumerate(points)
        for j, q in enumerate(points)
        if (p, q) in relation
    )


def simulation_preorder(
    models: Sequence[PointedModel],
    kind: SimKind = SimKind.WEAK,
    max_pairs: Optional[int] = None,
) -> FrozenSet[Tuple[int, int]]:
    """
    All pairs (i, j) such that models[j] kind-simulates models[i].

    Computed by one fixpoint over the union of the models and cached per
    model tuple.

    Raises:
        ResourceLimitExceeded: if the union has more than max_pairs world pairs
    """
    if max_pairs is None:
        max_pairs = SETTINGS["max_pairs"]
    if not models:
        return frozenset()
    return _preorder(tuple(models), kind, max_pairs)
