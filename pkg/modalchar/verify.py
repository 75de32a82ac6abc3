"""
Bounded uniqueness checking for example sets.

verify_characterization enumerates every fragment formula up to a depth bound
(one per equivalence class) and reports each one that fits the examples but
is not equivalent to the target.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from .errors import FragmentError, PreconditionError
from .kripke import ExampleSet, PointedModel, enumerate_models
from .semantics import equivalent, fits, fitting_trace, satisfies
from .simulation import minimize
from .syntax import Formula, Fragment, conj, enumerate_formula_classes, in_fragment, negate
from .tableau import find_model

logger = logging.getLogger(__name__)


@dataclass
class Competitor:
    formula: Formula
    rendering: str
    trace: List[Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return {"formula": self.rendering, "trace": self.trace}


@dataclass
class VerificationReport:
    formula: Formula
    depth_bound: int
    candidates_checked: int = 0
    competitors: List[Competitor] = field(default_factory=list)

    @property
    def unique(self) -> bool:
        return not self.competitors

    def to_json_lines(self) -> str:
        return "".join(json.dumps(c.to_dict()) + "\n" for c in self.competitors)


def verify_characterization(
    f: Formula,
    e: ExampleSet,
    fr: Fragment,
    depth_bound: Optional[int] = None,
    max_formulas: Optional[int] = None,
    max_models: Optional[int] = None,
) -> VerificationReport:
    """
    Search for fragment formulas other than f that fit e.

    Args:
        f: Target formula, a member of fr fitting e
        e: Example set
        fr: Fragment the competitors are drawn from
        depth_bound: Maximal competitor depth (default modal depth of f plus one)
        max_formulas: Budget on the number of formula classes
        max_models: Budget on the deduplication universe

    Returns:
        Report listing every competitor in canonical order

    Raises:
        FragmentError: if f is not in fr
        PreconditionError: if f does not fit e
    """
    if not in_fragment(f, fr):
        raise FragmentError(f"{f} is not in the fragment {fr}")
    if depth_bound is None:
        depth_bound = f.modal_depth + 1
    if not set(fr.props) <= set(e.props):
        e = ExampleSet(tuple(set(e.props) | set(fr.props)), e.positive, e.negative)
    if not fits(f, e):
        raise PreconditionError(f"{f} does not fit the example set")

    universe = enumerate_models(fr.props, depth_bound, max_models=max_models)
    classes = enumerate_formula_classes(
        fr, depth_bound, universe=universe, max_formulas=max_formulas
    )
    target_vector = None
    if f.modal_depth <= depth_bound:
        target_vector = sum(1 << i for i, m in enumerate(universe) if satisfies(m, f))

    report = VerificationReport(f, depth_bound)
    for g, vector in classes:
        report.candidates_checked += 1
        if not fits(g, e):
            continue
        if target_vector is not None:
            same = vector == target_vector
        else:
            same = equivalent(g, f, fr.props, max_models=max_models)
        if not same:
            report.competitors.append(Competitor(g, g.render(), fitting_trace(g, e)))

    logger.info(
        f"Checked {report.candidates_checked} candidates up to depth {depth_bound}: "
        f"{len(report.competitors)} competitors"
    )
    return report


def find_distinguishing_model(
    f: Formula, g: Formula, props: Optional[Iterable[str]] = None
) -> Optional[PointedModel]:
    """
    A model where exactly one of f and g holds, or None if they are equivalent.

    Returns:
        A minimized pointed model over props plus the formulas' variables
    """
    ambient = set(props or ()) | f.variables | g.variables
    for left, right in ((f, g), (g, f)):
        model = find_model(conj(left, negate(right)), ambient)
        if model is not None:
            return minimize(model)
    return None
