"""
Kripke semantics: satisfaction, fitting of example sets and equivalence.
"""

import logging
from typing import Any, Dict, FrozenSet, Iterable, List, Optional

from .config import SETTINGS
from .errors import UnknownPropositionError
from .kripke import ExampleSet, KripkeModel, PointedModel, count_models, enumerate_models
from .syntax import Atom, Bot, Box, Conj, Dia, Disj, Formula, NegAtom, Top, conj, negate
from .tableau import is_satisfiable

logger = logging.getLogger(__name__)


def extension(model: KripkeModel, f: Formula) -> FrozenSet[str]:
    """
    Worlds of model where f holds, computed bottom-up once per subformula.

    Raises:
        UnknownPropositionError: if f mentions a proposition outside model.props
    """
    unknown = f.variables - model.props
    if unknown:
        raise UnknownPropositionError(
            f"Formula mentions {sorted(unknown)} outside the model's propositions {sorted(model.props)}"
        )
    memo: Dict[Formula, FrozenSet[str]] = {}
    all_worlds = frozenset(model.worlds)

    def ext(g: Formula) -> FrozenSet[str]:
        if g in memo:
            return memo[g]
        if isinstance(g, Atom):
            result = frozenset(w for w in model.worlds if g.name in model.label(w))
        elif isinstance(g, NegAtom):
            result = frozenset(w for w in model.worlds if g.name not in model.label(w))
        elif isinstance(g, Top):
            result = all_worlds
        elif isinstance(g, Bot):
            result = frozenset()
        elif isinstance(g, Conj):
            result = all_worlds
            for op in g.operands:
                result &= ext(op)
        elif isinstance(g, Disj):
            result = frozenset()
            for op in g.operands:
                result |= ext(op)
        elif isinstance(g, Dia):
            inner = ext(g.operand)
            result = frozenset(
                w for w in model.worlds if any(s in inner for s in model.successors(w))
            )
        elif isinstance(g, Box):
            inner = ext(g.operand)
            result = frozenset(
                w for w in model.worlds if all(s in inner for s in model.successors(w))
            )
        else:
            raise TypeError(f"Not a formula: {g!r}")
        memo[g] = result
        return result

    return ext(f)


def satisfies(m: PointedModel, f: Formula) -> bool:
    return m.point in extension(m.model, f)


def fits(f: Formula, e: ExampleSet) -> bool:
    """True iff f holds at every positive and fails at every negative example."""
    return all(satisfies(m, f) for m in e.positive) and not any(
        satisfies(m, f) for m in e.negative
    )


def fitting_trace(f: Formula, e: ExampleSet) -> List[Dict[str, Any]]:
    """Per-example record of expected and actual truth values."""
    trace = []
    for side, models, expected in (
        ("positive", e.positive, True),
        ("negative", e.negative, False),
    ):
        for index, m in enumerate(models):
            actual = satisfies(m, f)
            trace.append(
                {"side": side, "index": index, "expected": expected, "actual": actual}
            )
    return trace


def equivalent(
    f: Formula,
    g: Formula,
    props: Optional[Iterable[str]] = None,
    max_models: Optional[int] = None,
) -> bool:
    """
    Decide K-equivalence of f and g.

    Both formulas are evaluated on every tree type of depth max(d(f), d(g))
    over their variables when that universe fits the model budget; deeper
    pairs go to the tableau.

    Raises:
        UnknownPropositionError: if a formula leaves props
    """
    variables = f.variables | g.variables
    if props is not None:
        unknown = variables - frozenset(props)
        if unknown:
            raise UnknownPropositionError(f"Formulas mention {sorted(unknown)} outside {sorted(props)}")
    if max_models is None:
        max_models = SETTINGS["max_models"]
    depth = max(f.modal_depth, g.modal_depth)

    if count_models(variables, depth, cap=max_models) <= max_models:
        universe = enumerate_models(variables, depth, max_models=max_models)
        return all(satisfies(m, f) == satisfies(m, g) for m in universe)

    logger.debug(f"Deciding {f} == {g} by tableau")
    return not is_satisfiable(conj(f, negate(g))) and not is_satisfiable(conj(g, negate(f)))
