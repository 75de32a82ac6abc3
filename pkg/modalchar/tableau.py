"""
Satisfiability of NNF formulas in the basic modal logic K.

A labelled tableau: conjunctions are expanded, disjunctions branch, a world
closes on a literal clash or on F, and every <>a opens one successor holding
a together with the operand of every [] at that world. Open tableaux are
read back as finite tree models.
"""

import logging
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from .config import SETTINGS
from .errors import ResourceLimitExceeded
from .kripke import KripkeModel, PointedModel
from .syntax import Atom, Bot, Box, Conj, Dia, Disj, Formula, NegAtom, Top

logger = logging.getLogger(__name__)

# (true atoms, successor nodes)
_Node = Tuple[FrozenSet[str], Tuple["_Node", ...]]


class _Tableau:
    def __init__(self):
        self.memo: Dict[FrozenSet[Formula], Optional[_Node]] = {}

    def solve(self, formulas: FrozenSet[Formula]) -> Optional[_Node]:
        if formulas in self.memo:
            return self.memo[formulas]
        result = self._solve(formulas)
        self.memo[formulas] = result
        return result

    def _solve(self, formulas: FrozenSet[Formula]) -> Optional[_Node]:
        ordered = sorted(formulas, key=lambda f: f.key)
        for f in ordered:
            if isinstance(f, Bot):
                return None
            if isinstance(f, Top):
                return self.solve(formulas - {f})
            if isinstance(f, Conj):
                return self.solve((formulas - {f}) | frozenset(f.operands))

        for f in ordered:
            if isinstance(f, Disj):
                rest = formulas - {f}
                for op in f.operands:
                    node = self.solve(rest | {op})
                    if node is not None:
                        return node
                return None

        atoms = frozenset(f.name for f in formulas if isinstance(f, Atom))
        negated = frozenset(f.name for f in formulas if isinstance(f, NegAtom))
        if atoms & negated:
            return None

        boxed = frozenset(f.operand for f in formulas if isinstance(f, Box))
        children = []
        for f in ordered:
            if isinstance(f, Dia):
                child = self.solve(boxed | {f.operand})
                if child is None:
                    return None
                children.append(child)
        return (atoms, tuple(children))


def _to_model(root: _Node, props: FrozenSet[str], max_worlds: int) -> PointedModel:
    names: Dict[_Node, str] = {root: "w0"}
    stack = [root]
    relation = set()
    while stack:
        node = stack.pop()
        for child in node[1]:
            if child not in names:
                if len(names) >= max_worlds:
                    raise ResourceLimitExceeded("worlds", max_worlds)
                names[child] = f"w{len(names)}"
                stack.append(child)
            relation.add((names[node], names[child]))
    valuation = tuple((name, node[0]) for node, name in names.items())
    model = KripkeModel(tuple(names.values()), frozenset(relation), valuation, props)
    return PointedModel(model, "w0")


def find_model(
    f: Formula, props: Optional[Iterable[str]] = None, max_worlds: Optional[int] = None
) -> Optional[PointedModel]:
    """
    Search for a pointed model of f.

    Args:
        f: NNF formula
        props: Ambient propositions of the returned model (default var(f))
        max_worlds: Budget on the size of the returned model

    Returns:
        A finite model satisfying f at its point, or None if f is unsatisfiable
    """
    if max_worlds is None:
        max_worlds = SETTINGS["max_worlds"]
    ambient = frozenset(props) if props is not None else f.variables
    ambient |= f.variables
    root = _Tableau().solve(frozenset([f]))
    if root is None:
        logger.debug(f"Tableau closed for {f}")
        return None
    return _to_model(root, ambient, max_worlds)


def is_satisfiable(f: Formula) -> bool:
    return _Tableau().solve(frozenset([f])) is not None
