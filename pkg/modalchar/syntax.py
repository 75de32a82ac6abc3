"""
Modal formulas in negation normal form.

Negation exists only as ``NegAtom``: there is no constructor that puts it in
front of a compound formula. Conjunctions and disjunctions are n-ary, their
operands flattened, deduplicated and kept in canonical order.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import FormulaSyntaxError, FragmentError, ResourceLimitExceeded

logger = logging.getLogger(__name__)

ATOM_RE = re.compile(r"[a-z][a-z0-9_]*\Z")

# binding strength used by the printer
_PREC_OR, _PREC_AND, _PREC_UNARY = 1, 2, 3


class Connective(Enum):
    AND = "&"
    OR = "|"
    DIA = "<>"
    BOX = "[]"
    TOP = "T"
    BOT = "F"


class Polarity(Enum):
    POSITIVE = "pos"
    NEGATIVE = "neg"
    UNRESTRICTED = "any"


class Formula:
    """Base class of all formula nodes."""

    precedence = _PREC_UNARY

    @property
    def children(self) -> Tuple["Formula", ...]:
        return ()

    @cached_property
    def key(self) -> tuple:
        """Canonical sort key; equal keys mean structurally equal formulas."""
        raise NotImplementedError

    @cached_property
    def modal_depth(self) -> int:
        return max((c.modal_depth for c in self.children), default=0)

    @cached_property
    def variables(self) -> FrozenSet[str]:
        result: FrozenSet[str] = frozenset()
        for child in self.children:
            result |= child.variables
        return result

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    def render(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.render()

    def _wrapped(self, min_prec: int) -> str:
        text = self.render()
        return f"({text})" if self.precedence < min_prec else text


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not ATOM_RE.match(self.name):
            raise ValueError(f"Invalid proposition name '{self.name}'")

    @cached_property
    def key(self) -> tuple:
        return (0, self.name)

    @cached_property
    def variables(self) -> FrozenSet[str]:
        return frozenset([self.name])

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class NegAtom(Formula):
    name: str

    def __post_init__(self):
        if not ATOM_RE.match(self.name):
            raise ValueError(f"Invalid proposition name '{self.name}'")

    @cached_property
    def key(self) -> tuple:
        return (1, self.name)

    @cached_property
    def variables(self) -> FrozenSet[str]:
        return frozenset([self.name])

    def render(self) -> str:
        return f"~{self.name}"


@dataclass(frozen=True)
class Top(Formula):
    @cached_property
    def key(self) -> tuple:
        return (2,)

    def render(self) -> str:
        return "T"


@dataclass(frozen=True)
class Bot(Formula):
    @cached_property
    def key(self) -> tuple:
        return (3,)

    def render(self) -> str:
        return "F"


@dataclass(frozen=True)
class Dia(Formula):
    operand: Formula

    @property
    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)

    @cached_property
    def key(self) -> tuple:
        return (4, self.operand.key)

    @cached_property
    def modal_depth(self) -> int:
        return 1 + self.operand.modal_depth

    def render(self) -> str:
        return "<>" + self.operand._wrapped(_PREC_UNARY)


@dataclass(frozen=True)
class Box(Formula):
    operand: Formula

    @property
    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)

    @cached_property
    def key(self) -> tuple:
        return (5, self.operand.key)

    @cached_property
    def modal_depth(self) -> int:
        return 1 + self.operand.modal_depth

    def render(self) -> str:
        return "[]" + self.operand._wrapped(_PREC_UNARY)


def _normalized(kind: type, operands: Iterable[Formula]) -> Tuple[Formula, ...]:
    flat: Dict[tuple, Formula] = {}
    for op in operands:
        parts = op.operands if isinstance(op, kind) else (op,)
        for part in parts:
            flat.setdefault(part.key, part)
    return tuple(flat[k] for k in sorted(flat))


@dataclass(frozen=True)
class Conj(Formula):
    operands: Tuple[Formula, ...]

    precedence = _PREC_AND

    def __post_init__(self):
        ops = _normalized(Conj, self.operands)
        if len(ops) < 2:
            raise ValueError("Conj needs two distinct operands; use conj()")
        object.__setattr__(self, "operands", ops)

    @property
    def children(self) -> Tuple[Formula, ...]:
        return self.operands

    @cached_property
    def key(self) -> tuple:
        return (6, tuple(op.key for op in self.operands))

    def render(self) -> str:
        return " & ".join(op._wrapped(_PREC_AND) for op in self.operands)


@dataclass(frozen=True)
class Disj(Formula):
    operands: Tuple[Formula, ...]

    precedence = _PREC_OR

    def __post_init__(self):
        ops = _normalized(Disj, self.operands)
        if len(ops) < 2:
            raise ValueError("Disj needs two distinct operands; use disj()")
        object.__setattr__(self, "operands", ops)

    @property
    def children(self) -> Tuple[Formula, ...]:
        return self.operands

    @cached_property
    def key(self) -> tuple:
        return (7, tuple(op.key for op in self.operands))

    def render(self) -> str:
        return " | ".join(op._wrapped(_PREC_OR) for op in self.operands)


def conj(*operands: Formula) -> Formula:
    """Conjunction with singletons collapsed (so <>p & <>p is <>p)."""
    ops = _normalized(Conj, operands)
    if not ops:
        raise ValueError("conj() needs at least one operand")
    return ops[0] if len(ops) == 1 else Conj(ops)


def disj(*operands: Formula) -> Formula:
    """Disjunction with singletons collapsed."""
    ops = _normalized(Disj, operands)
    if not ops:
        raise ValueError("disj() needs at least one operand")
    return ops[0] if len(ops) == 1 else Disj(ops)


def dia(f: Formula, times: int = 1) -> Formula:
    for _ in range(times):
        f = Dia(f)
    return f


def box(f: Formula, times: int = 1) -> Formula:
    for _ in range(times):
        f = Box(f)
    return f


def negate(f: Formula) -> Formula:
    """NNF dual of f, equivalent to its negation."""
    if isinstance(f, Atom):
        return NegAtom(f.name)
    if isinstance(f, NegAtom):
        return Atom(f.name)
    if isinstance(f, Top):
        return Bot()
    if isinstance(f, Bot):
        return Top()
    if isinstance(f, Conj):
        return disj(*(negate(op) for op in f.operands))
    if isinstance(f, Disj):
        return conj(*(negate(op) for op in f.operands))
    if isinstance(f, Dia):
        return Box(negate(f.operand))
    if isinstance(f, Box):
        return Dia(negate(f.operand))
    raise TypeError(f"Not a formula: {f!r}")


def render(f: Formula) -> str:
    return f.render()


def modal_depth(f: Formula) -> int:
    return f.modal_depth


def formula_size(f: Formula) -> int:
    return f.size


def formula_order(f: Formula) -> tuple:
    """Canonical output order: shallow first, then small, then structural."""
    return (f.modal_depth, f.size, f.key)


# --- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(r"<>|\[\]|[a-z][a-z0-9_]*|[TF~&|()]")


def _tokenize(text: str) -> List[Tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise FormulaSyntaxError(f"Unexpected character '{text[pos]}'", pos)
        tokens.append((match.group(0), pos))
        pos = match.end()
    return tokens


class _Parser:
    """Recursive descent: disj := conj ('|' conj)*, conj := unary ('&' unary)*."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> Optional[str]:
        if self.index < len(self.tokens):
            return self.tokens[self.index][0]
        return None

    def position(self) -> int:
        if self.index < len(self.tokens):
            return self.tokens[self.index][1]
        return len(self.text)

    def advance(self) -> str:
        token = self.tokens[self.index][0]
        self.index += 1
        return token

    def parse(self) -> Formula:
        if not self.tokens:
            raise FormulaSyntaxError("Empty formula", 0)
        result = self.disjunction()
        if self.peek() is not None:
            raise FormulaSyntaxError(f"Unexpected '{self.peek()}'", self.position())
        return result

    def disjunction(self) -> Formula:
        operands = [self.conjunction()]
        while self.peek() == "|":
            self.advance()
            operands.append(self.conjunction())
        return disj(*operands)

    def conjunction(self) -> Formula:
        operands = [self.unary()]
        while self.peek() == "&":
            self.advance()
            operands.append(self.unary())
        return conj(*operands)

    def unary(self) -> Formula:
        token = self.peek()
        if token == "<>":
            self.advance()
            return Dia(self.unary())
        if token == "[]":
            self.advance()
            return Box(self.unary())
        if token == "~":
            self.advance()
            target = self.peek()
            if target is None or not ATOM_RE.match(target):
                raise FormulaSyntaxError(
                    "Negation is only allowed in front of atoms", self.position()
                )
            return NegAtom(self.advance())
        return self.primary()

    def primary(self) -> Formula:
        token = self.peek()
        if token is None:
            raise FormulaSyntaxError("Unexpected end of formula", self.position())
        if token == "(":
            self.advance()
            inner = self.disjunction()
            if self.peek() != ")":
                raise FormulaSyntaxError("Expected ')'", self.position())
            self.advance()
            return inner
        if token == "T":
            self.advance()
            return Top()
        if token == "F":
            self.advance()
            return Bot()
        if ATOM_RE.match(token):
            self.advance()
            return Atom(token)
        raise FormulaSyntaxError(f"Unexpected '{token}'", self.position())


def parse_formula(text: str) -> Formula:
    """
    Parse ASCII formula text into an NNF formula.

    Args:
        text: Formula such as "p & <>q" or "[]F"

    Returns:
        The formula AST

    Raises:
        FormulaSyntaxError: with the offending position
    """
    return _Parser(text).parse()


# --- fragments -------------------------------------------------------------


@dataclass(frozen=True)
class Fragment:
    """A connective set, a polarity and a finite proposition set."""

    connectives: FrozenSet[Connective]
    polarity: Polarity
    props: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "connectives", frozenset(self.connectives))
        object.__setattr__(self, "props", tuple(sorted(set(self.props))))
        for name in self.props:
            if not ATOM_RE.match(name):
                raise FragmentError(f"Invalid proposition name '{name}'")

    def with_props(self, props: Iterable[str]) -> "Fragment":
        return Fragment(self.connectives, self.polarity, tuple(props))

    def __contains__(self, f: Formula) -> bool:
        return in_fragment(f, self)

    def __str__(self) -> str:
        return render_fragment(self)


_CONNECTIVE_ORDER = list(Connective)


def render_fragment(fr: Fragment) -> str:
    tokens = [c.value for c in _CONNECTIVE_ORDER if c in fr.connectives]
    return f"{fr.polarity.value}:{','.join(tokens)}"


def parse_fragment(text: str, props: Iterable[str]) -> Fragment:
    """
    Parse a fragment notation such as "pos:&,|,<>,[]".

    Args:
        text: Polarity prefix and comma-separated connective tokens
        props: Proposition names of the fragment

    Returns:
        The Fragment
    """
    prefix, sep, body = text.partition(":")
    if not sep:
        raise FragmentError(f"Fragment '{text}' lacks a polarity prefix")
    try:
        polarity = Polarity(prefix.strip())
    except ValueError:
        raise FragmentError(f"Unknown polarity '{prefix}'") from None

    connectives = set()
    for token in body.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            connectives.add(Connective(token))
        except ValueError:
            raise FragmentError(f"Unknown connective '{token}'") from None
    return Fragment(frozenset(connectives), polarity, tuple(props))


def in_fragment(f: Formula, fr: Fragment) -> bool:
    """True iff every node of f is allowed by the fragment."""
    if isinstance(f, Atom):
        return fr.polarity != Polarity.NEGATIVE and f.name in fr.props
    if isinstance(f, NegAtom):
        return fr.polarity != Polarity.POSITIVE and f.name in fr.props
    if isinstance(f, Top):
        return Connective.TOP in fr.connectives
    if isinstance(f, Bot):
        return Connective.BOT in fr.connectives
    needed = {
        Conj: Connective.AND,
        Disj: Connective.OR,
        Dia: Connective.DIA,
        Box: Connective.BOX,
    }[type(f)]
    if needed not in fr.connectives:
        return False
    return all(in_fragment(child, fr) for child in f.children)


# --- enumeration -----------------------------------------------------------


class _ClassTable:
    """Truth vector -> smallest known representative, with a size budget."""

    def __init__(self, max_formulas: int):
        self.table: Dict[int, Formula] = {}
        self.max_formulas = max_formulas

    def offer(self, vector: int, f: Formula) -> bool:
        current = self.table.get(vector)
        if current is None:
            if len(self.table) >= self.max_formulas:
                raise ResourceLimitExceeded("formulas", self.max_formulas)
            self.table[vector] = f
            return True
        if (f.size, f.key) < (current.size, current.key):
            self.table[vector] = f
        return False

    def ordered(self) -> List[Tuple[int, Formula]]:
        return sorted(self.table.items(), key=lambda item: formula_order(item[1]))


def _close(
    generators: _ClassTable, fr: Fragment, width: int, max_formulas: int
) -> _ClassTable:
    has_and = Connective.AND in fr.connectives
    has_or = Connective.OR in fr.connectives
    gens = generators.ordered()
    result = _ClassTable(max_formulas)
    for vector, f in gens:
        result.offer(vector, f)

    if has_and and has_or:
        # The sublattice generated by gens is the set of unions of the
        # principal meets, one per universe member, plus the empty meet.
        by_restriction = sorted(gens, key=lambda item: bin(item[0]).count("1"))
        principal = _ClassTable(max_formulas)
        for i in range(width):
            acc = -1
            chosen = []
            for vector, f in by_restriction:
                if (vector >> i) & 1 and acc & vector != acc:
                    acc &= vector
                    chosen.append(f)
            if chosen:
                principal.offer(acc, conj(*chosen))
        if gens:
            acc = -1
            chosen = []
            for vector, f in by_restriction:
                if acc & vector != acc:
                    acc &= vector
                    chosen.append(f)
            if acc == 0:
                result.offer(0, conj(*chosen))
        for vector, f in principal.ordered():
            result.offer(vector, f)
        for p_vector, p_formula in principal.ordered():
            for vector, f in list(result.table.items()):
                if vector:
                    result.offer(vector | p_vector, disj(f, p_formula))
    elif has_and:
        for g_vector, g_formula in gens:
            for vector, f in list(result.table.items()):
                result.offer(vector & g_vector, conj(f, g_formula))
    elif has_or:
        for g_vector, g_formula in gens:
            for vector, f in list(result.table.items()):
                result.offer(vector | g_vector, disj(f, g_formula))
    return result


def enumerate_formula_classes(
    fr: Fragment,
    max_depth: int,
    universe: Optional[Sequence] = None,
    max_formulas: Optional[int] = None,
    max_models: Optional[int] = None,
) -> List[Tuple[Formula, int]]:
    """
    Enumerate one representative per equivalence class of fragment members.

    Two formulas are equivalent when they agree on every universe model; the
    default universe is every depth-``max_depth`` tree type over the
    fragment's propositions, which makes the classes exact K-equivalence
    classes.

    Args:
        fr: Fragment to enumerate
        max_depth: Maximal modal depth
        universe: Pointed models used for semantic deduplication
        max_formulas: Budget on the number of classes
        max_models: Budget on the default universe

    Returns:
        (representative, truth vector) pairs in canonical order; bit i of the
        vector is the truth value at universe[i]
    """
    from .config import SETTINGS
    from .kripke import enumerate_models
    from .semantics import satisfies

    if max_formulas is None:
        max_formulas = SETTINGS["max_formulas"]
    if universe is None:
        universe = enumerate_models(fr.props, max_depth, max_models=max_models)
    width = len(universe)

    def vector_of(f: Formula) -> int:
        bits = 0
        for i, model in enumerate(universe):
            if satisfies(model, f):
                bits |= 1 << i
        return bits

    generators = _ClassTable(max_formulas)
    for name in fr.props:
        if fr.polarity != Polarity.NEGATIVE:
            generators.offer(vector_of(Atom(name)), Atom(name))
        if fr.polarity != Polarity.POSITIVE:
            generators.offer(vector_of(NegAtom(name)), NegAtom(name))
    if Connective.TOP in fr.connectives:
        generators.offer(vector_of(Top()), Top())
    if Connective.BOT in fr.connectives:
        generators.offer(vector_of(Bot()), Bot())

    classes = _close(generators, fr, width, max_formulas)
    logger.debug(f"Depth 0: {len(classes.table)} classes")

    modal = [c for c in (Connective.DIA, Connective.BOX) if c in fr.connectives]
    for depth in range(1, max_depth + 1):
        if not modal:
            break
        generators = _ClassTable(max_formulas)
        for vector, f in classes.ordered():
            generators.offer(vector, f)
        for _, f in classes.ordered():
            if Connective.DIA in fr.connectives:
                generators.offer(vector_of(Dia(f)), Dia(f))
            if Connective.BOX in fr.connectives:
                generators.offer(vector_of(Box(f)), Box(f))
        previous = len(classes.table)
        classes = _close(generators, fr, width, max_formulas)
        logger.debug(f"Depth {depth}: {len(classes.table)} classes")
        if len(classes.table) == previous:
            break

    logger.info(
        f"Enumerated {len(classes.table)} classes of {render_fragment(fr)} "
        f"up to depth {max_depth} over {width} models"
    )
    return [(f, vector) for vector, f in classes.ordered()]


def enumerate_formulas(
    fr: Fragment,
    max_depth: int,
    dedup_universe: Optional[Sequence] = None,
    max_formulas: Optional[int] = None,
    max_models: Optional[int] = None,
) -> List[Formula]:
    """One representative per class of fragment members of depth <= max_depth."""
    classes = enumerate_formula_classes(
        fr, max_depth, dedup_universe, max_formulas, max_models
    )
    return [f for f, _ in classes]
