"""
Exact learning of a hidden fragment formula from membership queries.

The learner keeps every fragment formula class of bounded depth as a live
candidate, repeatedly queries the first universe model on which the live
candidates disagree, and drops the candidates the answer contradicts.
"""

import json
import logging
import shlex
import subprocess
from abc import ABC, abstractmethod
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import LearningError, OracleInconsistencyError, OracleProtocolError
from .kripke import PointedModel, dumps_model, enumerate_models, model_from_dict
from .semantics import satisfies
from .syntax import Formula, Fragment, enumerate_formula_classes, parse_formula

logger = logging.getLogger(__name__)


class MembershipOracle(ABC):
    """Answers whether the hidden formula holds at a pointed model."""

    def __init__(self):
        self.queries = 0

    def ask(self, model: PointedModel) -> bool:
        self.queries += 1
        answer = self._answer(model)
        logger.debug(f"Query {self.queries}: {dumps_model(model)} -> {answer}")
        return answer

    @abstractmethod
    def _answer(self, model: PointedModel) -> bool:
        ...

    def announce(self, formula: Formula) -> None:
        """Receive the learner's final hypothesis."""


class SimulatedOracle(MembershipOracle):
    def __init__(self, hidden: Formula):
        super().__init__()
        self.hidden = hidden

    def _answer(self, model: PointedModel) -> bool:
        return satisfies(model, self.hidden)


def simulate_oracle(hidden: Formula) -> SimulatedOracle:
    return SimulatedOracle(hidden)


class StdioOracle(MembershipOracle):
    """
    Oracle backed by an external process speaking the line protocol:
    the learner writes ``QUERY <model json>`` and reads ``TRUE`` or ``FALSE``;
    it ends the session with ``ANSWER <formula>``.
    """

    def __init__(self, command: Union[str, Sequence[str]]):
        super().__init__()
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        try:
            self.process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except (FileNotFoundError, PermissionError) as e:
            raise OracleProtocolError(f"Cannot start oracle {self.command}: {e}") from None
        logger.info(f"Started oracle process: {' '.join(self.command)}")

    def _send(self, line: str) -> None:
        try:
            self.process.stdin.write(line + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise OracleProtocolError(f"Oracle process is gone: {e}") from None

    def _answer(self, model: PointedModel) -> bool:
        self._send(f"QUERY {dumps_model(model)}")
        reply = self.process.stdout.readline()
        if not reply:
            raise OracleProtocolError("Oracle closed the connection")
        reply = reply.strip()
        if reply == "TRUE":
            return True
        if reply == "FALSE":
            return False
        raise OracleProtocolError(f"Unexpected oracle reply '{reply}'")

    def announce(self, formula: Formula) -> None:
        self._send(f"ANSWER {formula.render()}")

    def close(self, timeout: float = 10) -> int:
        if self.process.stdin and not self.process.stdin.closed:
            self.process.stdin.close()
        try:
            return self.process.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self.process.kill()
            return self.process.wait()

    def __enter__(self) -> "StdioOracle":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def answer_queries(
    formula: Formula, props: Iterable[str], stdin: IO[str], stdout: IO[str]
) -> int:
    """
    Answer the queries of the protocol until ANSWER or end of input.

    Returns:
        Number of queries answered
    """
    props = tuple(props)
    answered = 0
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        command, _, payload = line.partition(" ")
        if command == "QUERY":
            try:
                model = model_from_dict(json.loads(payload), props)
            except json.JSONDecodeError as e:
                raise OracleProtocolError(f"Malformed query: {e}") from None
            answered += 1
            stdout.write("TRUE\n" if satisfies(model, formula) else "FALSE\n")
            stdout.flush()
        elif command == "ANSWER":
            logger.info(f"Learner answered {payload} after {answered} queries")
            hypothesis = parse_formula(payload)
            logger.info(f"Hypothesis is {hypothesis}")
            break
        else:
            raise OracleProtocolError(f"Unknown command '{command}'")
    return answered


def learn_version_space(
    fr: Fragment,
    depth_bound: int,
    oracle: MembershipOracle,
    graft_loops: bool = False,
    max_models: Optional[int] = None,
    max_formulas: Optional[int] = None,
) -> Formula:
    """
    Identify the hidden formula among all fragment formulas of bounded depth.

    Args:
        fr: Fragment containing the hidden formula
        depth_bound: Upper bound on its modal depth
        oracle: Membership oracle
        graft_loops: Draw queries from the universe with grafted loops

    Returns:
        A candidate equivalent to the hidden formula

    Raises:
        OracleInconsistencyError: if the answers rule out every candidate
        ResourceLimitExceeded: if the candidate space is too large
    """
    plain = enumerate_models(fr.props, depth_bound, max_models=max_models)
    classes = enumerate_formula_classes(fr, depth_bound, plain, max_formulas=max_formulas)
    if graft_loops:
        universe = enumerate_models(fr.props, depth_bound, True, max_models=max_models)
        live: List[Tuple[Formula, int]] = [
            (f, sum(1 << i for i, m in enumerate(universe) if satisfies(m, f)))
            for f, _ in classes
        ]
    else:
        universe = plain
        live = list(classes)
    if not live:
        raise LearningError(f"Fragment {fr} has no formulas up to depth {depth_bound}")
    logger.info(f"Learning among {len(live)} candidates")

    while len(live) > 1:
        agree_true = -1
        agree_any = 0
        for _, vector in live:
            agree_true &= vector
            agree_any |= vector
        disputed = agree_any & ~agree_true
        if not disputed:
            raise LearningError("Live candidates cannot be told apart by the universe")
        index = (disputed & -disputed).bit_length() - 1
        answer = oracle.ask(universe[index])
        live = [(f, v) for f, v in live if bool((v >> index) & 1) == answer]
        logger.debug(f"{len(live)} candidates left")
        if not live:
            raise OracleInconsistencyError(
                f"No candidate is consistent with the {oracle.queries} answers given"
            )

    result = live[0][0]
    logger.info(f"Learned {result} with {oracle.queries} queries")
    oracle.announce(result)
    return result
