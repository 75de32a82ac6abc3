"""
Finite characterizations by examples.

- characterize_conj_diamond: canonical tree plus its frontier for formulas
  built from atoms, conjunction and diamond.
- characterize_positive: weak-simulation minimal models and maximal
  non-models over the bounded universe with grafted loops.
- characterize_uniform: the positive construction after renaming negated
  propositions.
- refute_full_language / refute_bot_fragment: for any example set fitted by
  []F, a different formula that fits it too.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .config import SETTINGS
from .errors import (
    CharacterizationError,
    FragmentError,
    PreconditionError,
    ResourceLimitExceeded,
)
from .kripke import (
    ExampleSet,
    KripkeModel,
    PointedModel,
    count_models,
    enumerate_models,
    height,
    model_sort_key,
    model_to_dict,
)
from .semantics import fits, satisfies
from .simulation import SimKind, minimize, simulation_preorder, structural_key
from .syntax import (
    Atom,
    Bot,
    Box,
    Conj,
    Connective,
    Dia,
    Disj,
    Formula,
    Fragment,
    NegAtom,
    Polarity,
    Top,
    box,
    conj,
    dia,
    disj,
    in_fragment,
)
from .verify import find_distinguishing_model, verify_characterization

logger = logging.getLogger(__name__)

__all__ = [
    "ExampleSet",
    "DualityReport",
    "Violation",
    "canonical_model",
    "frontier",
    "characterize_conj_diamond",
    "characterize_positive",
    "characterize_uniform",
    "check_duality",
    "refute_full_language",
    "refute_bot_fragment",
]

# (atoms, children)
_Tree = Tuple[FrozenSet[str], Tuple["_Tree", ...]]

_CONJ_DIAMOND = frozenset([Connective.AND, Connective.DIA, Connective.TOP])
_POSITIVE = frozenset([Connective.AND, Connective.OR, Connective.DIA, Connective.BOX])


def _require(f: Formula, fr: Fragment, polarity: Polarity, allowed: FrozenSet[Connective]) -> None:
    if fr.polarity is not polarity or not fr.connectives <= allowed:
        raise FragmentError(f"Fragment {fr} is not supported by this construction")
    if not in_fragment(f, fr):
        raise FragmentError(f"{f} is not in the fragment {fr}")


# --- conjunction/diamond formulas ------------------------------------------


def _tree_of(f: Formula) -> _Tree:
    conjuncts = f.operands if isinstance(f, Conj) else (f,)
    atoms = frozenset(c.name for c in conjuncts if isinstance(c, Atom))
    children = tuple(_tree_of(c.operand) for c in conjuncts if isinstance(c, Dia))
    for c in conjuncts:
        if not isinstance(c, (Atom, Dia, Top)):
            raise FragmentError(f"{c} is not built from atoms, & and <>")
    return atoms, children


def _tree_model(tree: _Tree, props: Iterable[str]) -> PointedModel:
    worlds: List[str] = ["w0"]
    labels = {"w0": tree[0]}
    relation = []
    stack = [("w0", tree)]
    while stack:
        name, node = stack.pop()
        for child in node[1]:
            child_name = f"w{len(worlds)}"
            worlds.append(child_name)
            labels[child_name] = child[0]
            relation.append((name, child_name))
            stack.append((child_name, child))
    model = KripkeModel(tuple(worlds), frozenset(relation), tuple(labels.items()), frozenset(props))
    return PointedModel(model, "w0")


def _tree_formula(tree: _Tree) -> Formula:
    parts: List[Formula] = [Atom(p) for p in sorted(tree[0])]
    parts.extend(Dia(_tree_formula(child)) for child in tree[1])
    return conj(*parts) if parts else Top()


def _implies(left: _Tree, right: _Tree) -> bool:
    """Entailment between conjunction/diamond formulas via canonical models."""
    target = _tree_formula(right)
    props = _tree_formula(left).variables | target.variables
    return satisfies(_tree_model(left, props), target)


def _reduce(tree: _Tree) -> _Tree:
    """Drop every diamond implied by a sibling diamond."""
    children = sorted({_reduce(c) for c in tree[1]}, key=lambda c: _tree_formula(c).key)
    kept: List[_Tree] = []
    for i, child in enumerate(children):
        redundant = any(
            j != i and _implies(other, child) and (not _implies(child, other) or j < i)
            for j, other in enumerate(children)
        )
        if not redundant:
            kept.append(child)
    return tree[0], tuple(kept)


def _frontier_trees(tree: _Tree) -> List[_Tree]:
    atoms, children = tree
    result = [(atoms - {p}, children) for p in sorted(atoms)]
    for j, child in enumerate(children):
        others = children[:j] + children[j + 1 :]
        result.append((atoms, others + tuple(_frontier_trees(child))))
    return result


def canonical_model(f: Formula, props: Optional[Iterable[str]] = None) -> PointedModel:
    """Tree model of f: atoms become the label, each diamond a child."""
    ambient = frozenset(props) if props is not None else f.variables
    return _tree_model(_tree_of(f), ambient | f.variables)


def frontier(f: Formula, props: Optional[Iterable[str]] = None) -> List[PointedModel]:
    """Non-models of f obtained by dropping one required atom or weakening one child."""
    ambient = frozenset(props) if props is not None else f.variables
    trees = _frontier_trees(_reduce(_tree_of(f)))
    return _canonical_examples(_tree_model(t, ambient | f.variables) for t in trees)


def _canonical_examples(models: Iterable[PointedModel]) -> List[PointedModel]:
    seen = set()
    result = []
    for m in models:
        m = minimize(m)
        key = structural_key(m)
        if key is None:
            key = model_sort_key(m)
        if key not in seen:
            seen.add(key)
            result.append(m)
    return sorted(result, key=model_sort_key)


def characterize_conj_diamond(
    f: Formula, fr: Fragment, verify_depth: Optional[int] = None
) -> ExampleSet:
    """
    Characterize a formula built from atoms, & and <> in polynomial time.

    Args:
        f: Formula of the fragment
        fr: Positive fragment with connectives among &, <> (and T)
        verify_depth: If given, run the bounded verifier up to this depth

    Returns:
        ({canonical tree of f}, frontier of the reduced tree)

    Raises:
        FragmentError: if f or fr is outside the supported fragment
        CharacterizationError: if the optional verification finds a competitor
    """
    _require(f, fr, Polarity.POSITIVE, _CONJ_DIAMOND)
    tree = _reduce(_tree_of(f))
    positive = minimize(_tree_model(tree, fr.props))
    negative = _canonical_examples(_tree_model(t, fr.props) for t in _frontier_trees(tree))
    result = ExampleSet(fr.props, (positive,), tuple(negative))
    logger.info(f"Characterized {f}: 1 positive, {len(negative)} negative examples")

    if verify_depth is not None:
        report = verify_characterization(f, result, fr, verify_depth)
        if not report.unique:
            raise CharacterizationError(
                f"{len(report.competitors)} competitors fit the examples of {f}, "
                f"e.g. {report.competitors[0].rendering}"
            )
    return result


# --- duality ---------------------------------------------------------------


@dataclass
class Violation:
    index: int
    model: PointedModel
    satisfied: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"index": self.index, "satisfied": self.satisfied, "model": model_to_dict(self.model)}


@dataclass
class DualityReport:
    universe_size: int
    violations: List[Violation] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def _joint_preorder(
    universe: Sequence[PointedModel], examples: Sequence[PointedModel]
) -> Tuple[FrozenSet[Tuple[int, int]], List[int]]:
    """Weak-simulation preorder over universe + examples, reusing the universe's when possible."""
    universe = tuple(universe)
    index = {}
    for i, m in enumerate(universe):
        key = structural_key(m)
        if key is not None:
            index.setdefault(key, i)
    positions = [index.get(structural_key(m)) for m in examples]
    if all(p is not None for p in positions):
        return simulation_preorder(universe, SimKind.WEAK), positions  # type: ignore[return-value]
    combined = universe + tuple(examples)
    return simulation_preorder(combined, SimKind.WEAK), list(
        range(len(universe), len(combined))
    )


def check_duality(f: Formula, e: ExampleSet, universe: Sequence[PointedModel]) -> DualityReport:
    """
    List universe models breaking the duality contract.

    A model of f must weakly simulate some positive example; a non-model
    must be weakly simulated by some negative example.
    """
    report = DualityReport(len(universe))
    if not universe:
        return report
    universe = tuple(m if m.props == frozenset(e.props) else m.with_props(e.props) for m in universe)
    order, positions = _joint_preorder(universe, e.positive + e.negative)
    pos_idx = positions[: len(e.positive)]
    neg_idx = positions[len(e.positive) :]

    for i, m in enumerate(universe):
        if satisfies(m, f):
            if not any((p, i) in order for p in pos_idx):
                report.violations.append(Violation(i, m, True))
        elif not any((i, n) in order for n in neg_idx):
            report.violations.append(Violation(i, m, False))
    logger.info(f"Duality check over {len(universe)} models: {len(report.violations)} violations")
    return report


def _extremal(
    candidates: List[int], order: FrozenSet[Tuple[int, int]], universe: Sequence[PointedModel], minimal: bool
) -> List[int]:
    """Minimal (or maximal) candidates, one per mutual-simulation class, smallest first."""
    chosen: List[int] = []
    for i in sorted(candidates, key=lambda k: model_sort_key(universe[k])):
        dominated = False
        for j in candidates:
            below = (j, i) in order if minimal else (i, j) in order
            above = (i, j) in order if minimal else (j, i) in order
            if below and not above:
                dominated = True
                break
        if dominated:
            continue
        if any((i, k) in order and (k, i) in order for k in chosen):
            continue
        chosen.append(i)
    return chosen


def characterize_positive(
    f: Formula,
    fr: Fragment,
    verify_depth: Optional[int] = None,
    max_models: Optional[int] = None,
    max_formulas: Optional[int] = None,
    max_pairs: Optional[int] = None,
) -> ExampleSet:
    """
    Characterize a positive formula over [], <>, & and |.

    Positive examples are the weak-simulation minimal models of f in the
    depth-d(f) universe with grafted loops, negative examples the maximal
    non-models. The result is checked for fitting, for the duality contract
    on that universe and by the bounded verifier.

    Args:
        f: Formula of the fragment
        fr: Positive fragment with connectives among [], <>, &, |
        verify_depth: Verifier depth bound (default the modal depth of f)
        max_models: Budget on the universe
        max_formulas: Budget on the verifier's formula classes
        max_pairs: Budget on the pairs of the weak-simulation preorder

    Returns:
        The example set

    Raises:
        FragmentError: if f or fr is outside the supported fragment
        ResourceLimitExceeded: if the universe is too large
        CharacterizationError: if a self-check fails
    """
    _require(f, fr, Polarity.POSITIVE, _POSITIVE)
    if max_pairs is None:
        max_pairs = SETTINGS["max_pairs"]
    size = count_models(fr.props, f.modal_depth, graft_loops=True, cap=max_pairs)
    if size * size > max_pairs:
        raise ResourceLimitExceeded("pairs", max_pairs)
    universe = enumerate_models(fr.props, f.modal_depth, graft_loops=True, max_models=max_models)
    order = simulation_preorder(universe, SimKind.WEAK, max_pairs)
    truth = [satisfies(m, f) for m in universe]
    models = [i for i, t in enumerate(truth) if t]
    non_models = [i for i, t in enumerate(truth) if not t]

    positive = [minimize(universe[i]) for i in _extremal(models, order, universe, minimal=True)]
    negative = [minimize(universe[i]) for i in _extremal(non_models, order, universe, minimal=False)]
    result = ExampleSet(fr.props, tuple(positive), tuple(negative))
    logger.info(f"Characterized {f}: {len(positive)} positive, {len(negative)} negative examples")

    if not fits(f, result):
        raise CharacterizationError(f"{f} does not fit its own examples")
    report = check_duality(f, result, universe)
    if not report.holds:
        raise CharacterizationError(f"Duality fails on {len(report.violations)} universe models")
    depth = f.modal_depth if verify_depth is None else verify_depth
    verification = verify_characterization(
        f, result, fr, depth, max_formulas=max_formulas, max_models=max_models
    )
    if not verification.unique:
        raise CharacterizationError(
            f"{len(verification.competitors)} competitors fit the examples of {f}, "
            f"e.g. {verification.competitors[0].rendering}"
        )
    return result


# --- uniform formulas ------------------------------------------------------


def derive_polarity(f: Formula, props: Iterable[str]) -> Dict[str, Polarity]:
    """Negative for propositions that occur negated in f, positive otherwise."""
    negated = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, NegAtom):
            negated.add(g.name)
        stack.extend(g.children)
    return {p: Polarity.NEGATIVE if p in negated else Polarity.POSITIVE for p in props}


def _rename(f: Formula, renaming: Mapping[str, str], polarity: Mapping[str, Polarity]) -> Formula:
    if isinstance(f, Atom):
        if polarity.get(f.name, Polarity.POSITIVE) is not Polarity.POSITIVE:
            raise FragmentError(f"{f.name} occurs positively but is declared negative")
        return f
    if isinstance(f, NegAtom):
        if polarity.get(f.name) is not Polarity.NEGATIVE:
            raise FragmentError(f"{f.name} occurs negated but is declared positive")
        return Atom(renaming[f.name])
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Conj):
        return conj(*(_rename(op, renaming, polarity) for op in f.operands))
    if isinstance(f, Disj):
        return disj(*(_rename(op, renaming, polarity) for op in f.operands))
    if isinstance(f, Dia):
        return Dia(_rename(f.operand, renaming, polarity))
    return Box(_rename(f.operand, renaming, polarity))


def fresh_proposition(taken: Iterable[str], base: str = "q") -> str:
    taken = set(taken)
    if base not in taken:
        return base
    index = 1
    while f"{base}{index}" in taken:
        index += 1
    return f"{base}{index}"


def characterize_uniform(
    f: Formula,
    polarity_map: Optional[Mapping[str, Polarity]],
    fr: Fragment,
    verify_depth: Optional[int] = None,
    max_models: Optional[int] = None,
    max_formulas: Optional[int] = None,
    max_pairs: Optional[int] = None,
) -> ExampleSet:
    """
    Characterize a formula whose propositions each occur with one polarity.

    Negated propositions are renamed to fresh atoms, the positive formula is
    characterized, and the fresh atoms are complemented back into the
    original propositions in every example (loops included).

    Args:
        f: Formula of fr
        polarity_map: Polarity per proposition (derived from f when None)
        fr: Fragment with connectives among [], <>, &, |
        verify_depth: If given, verify the result against fr up to this depth

    Raises:
        FragmentError: if f breaks polarity_map or fr is unsupported
    """
    if not fr.connectives <= _POSITIVE:
        raise FragmentError(f"Fragment {fr} is not supported by this construction")
    if not in_fragment(f, fr):
        raise FragmentError(f"{f} is not in the fragment {fr}")
    if polarity_map is None:
        polarity_map = derive_polarity(f, fr.props)
    polarity = {p: polarity_map.get(p, Polarity.POSITIVE) for p in fr.props}

    taken = set(fr.props)
    renaming: Dict[str, str] = {}
    for p in fr.props:
        if polarity[p] is Polarity.NEGATIVE:
            renaming[p] = fresh_proposition(taken, f"{p}_bar")
            taken.add(renaming[p])
    renamed = _rename(f, renaming, polarity)
    renamed_props = tuple(renaming.get(p, p) for p in fr.props)
    positive_fr = Fragment(fr.connectives, Polarity.POSITIVE, renamed_props)
    inner = characterize_positive(
        renamed,
        positive_fr,
        max_models=max_models,
        max_formulas=max_formulas,
        max_pairs=max_pairs,
    )

    back = {fresh: p for p, fresh in renaming.items()}

    def restore(label: FrozenSet[str]) -> FrozenSet[str]:
        kept = {p for p in label if p not in back}
        flipped = {p for fresh, p in back.items() if fresh not in label}
        return frozenset(kept | flipped)

    def convert(m: PointedModel) -> PointedModel:
        return PointedModel(m.model.map_labels(restore, fr.props), m.point)

    result = ExampleSet(
        fr.props,
        tuple(convert(m) for m in inner.positive),
        tuple(convert(m) for m in inner.negative),
    )
    if not fits(f, result):
        raise CharacterizationError(f"{f} does not fit its own examples")
    if verify_depth is not None:
        report = verify_characterization(
            f, result, fr, verify_depth, max_formulas=max_formulas, max_models=max_models
        )
        if not report.unique:
            raise CharacterizationError(
                f"{len(report.competitors)} competitors fit the examples of {f}, "
                f"e.g. {report.competitors[0].rendering}"
            )
    return result


# --- refuters --------------------------------------------------------------


def _refuter_depth(e: ExampleSet) -> int:
    if not fits(Box(Bot()), e):
        raise PreconditionError("[]F does not fit the example set")
    finite = [h for h in (height(m) for m in e.negative) if h != math.inf]
    return 1 + max(finite) if finite else 1


def refute_full_language(e: ExampleSet) -> Formula:
    """
    A formula other than []F fitting an example set that []F fits.

    Returns:
        ([]^(n+1)F & <>^n T) | []F, with n one more than the largest finite
        height of a negative example

    Raises:
        PreconditionError: if []F does not fit e
    """
    n = _refuter_depth(e)
    result = disj(conj(box(Bot(), n + 1), dia(Top(), n)), Box(Bot()))
    if not fits(result, e):
        raise CharacterizationError(f"{result} does not fit the example set")
    if find_distinguishing_model(result, Box(Bot()), e.props) is None:
        raise CharacterizationError(f"{result} is equivalent to []F")
    logger.info(f"Refuter with n={n}: {result}")
    return result


def refute_bot_fragment(e: ExampleSet, fresh: Optional[str] = None) -> Formula:
    """
    Like refute_full_language, but inside the positive fragment with F:
    the T under the diamonds becomes the fresh proposition.

    Raises:
        PreconditionError: if []F does not fit e or fresh is not fresh
    """
    if fresh is None:
        fresh = fresh_proposition(e.props)
    if fresh in e.props:
        raise PreconditionError(f"Proposition {fresh} already occurs in the example set")
    n = _refuter_depth(e)
    result = disj(conj(box(Bot(), n + 1), dia(Atom(fresh), n)), Box(Bot()))
    extended = ExampleSet(tuple(e.props) + (fresh,), e.positive, e.negative)
    if not fits(result, extended):
        raise CharacterizationError(f"{result} does not fit the example set")
    if find_distinguishing_model(result, Box(Bot()), extended.props) is None:
        raise CharacterizationError(f"{result} is equivalent to []F")
    logger.info(f"Refuter with n={n}: {result}")
    return result
