"""
Command-line interface for modalchar.

Exit codes: 0 success, 1 a semantic "no" (false, not simulated, competitors
found, duality violated), 2 usage or input errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from . import __version__
from .config import FRAGMENT_PRESETS, get_fragment_preset, load_settings, setup_logging
from .errors import ModalCharError
from .syntax import Connective, Formula, Fragment, Polarity, parse_formula, parse_fragment

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


def _split_props(text: Optional[str]) -> Tuple[str, ...]:
    if not text:
        return ()
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _fragment(text: str, props: Iterable[str]) -> Fragment:
    """A preset name or an explicit notation such as pos:&,<>."""
    if text in FRAGMENT_PRESETS:
        return get_fragment_preset(text, props)
    return parse_fragment(text, props)


def _parse_polarity(text: Optional[str]) -> Optional[Dict[str, Polarity]]:
    if not text:
        return None
    result = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        if not sep:
            raise ModalCharError(f"Polarity entry '{item}' must look like p=pos")
        try:
            result[name.strip()] = Polarity(value.strip())
        except ValueError:
            raise ModalCharError(f"Unknown polarity '{value}'") from None
    return result


def _print_json(data: Any) -> None:
    print(json.dumps(data))


def _verdict(flag: bool) -> int:
    print("true" if flag else "false")
    return EXIT_OK if flag else EXIT_NO


def cmd_check(args) -> int:
    from .kripke import load_model
    from .semantics import satisfies

    formula = parse_formula(args.formula)
    model = load_model(args.model, _split_props(args.props) + tuple(formula.variables))
    return _verdict(satisfies(model, formula))


def cmd_relation(args) -> int:
    """bisim, sim and wsim: does target relate to source?"""
    from .kripke import load_model
    from .simulation import bisimilar, simulates, weakly_simulates

    props = _split_props(args.props)
    source = load_model(args.source, props)
    target = load_model(args.target, props)
    ambient = source.props | target.props
    source, target = source.with_props(ambient), target.with_props(ambient)

    if args.command == "bisim":
        witness = bisimilar(source, target)
    elif args.command == "sim":
        witness = simulates(target, source)
    else:
        witness = weakly_simulates(target, source)

    code = _verdict(witness is not None)
    if witness is not None and args.witness:
        _print_json(witness.to_dict())
    return code


def _characterize(
    formula: Formula, fragment: Fragment, args, limits: Dict[str, int]
):
    from .characterize import (
        characterize_conj_diamond,
        characterize_positive,
        characterize_uniform,
    )

    polarity = _parse_polarity(args.polarity)
    conj_diamond = {Connective.AND, Connective.DIA, Connective.TOP}
    positive = {Connective.AND, Connective.OR, Connective.DIA, Connective.BOX}

    if fragment.polarity is Polarity.POSITIVE and polarity is None:
        if fragment.connectives <= conj_diamond:
            return characterize_conj_diamond(formula, fragment, args.verify_depth)
        if fragment.connectives <= positive:
            return characterize_positive(
                formula,
                fragment,
                args.verify_depth,
                max_models=limits["max_models"],
                max_formulas=limits["max_formulas"],
                max_pairs=limits["max_pairs"],
            )
    return characterize_uniform(
        formula,
        polarity,
        fragment,
        args.verify_depth,
        max_models=limits["max_models"],
        max_formulas=limits["max_formulas"],
        max_pairs=limits["max_pairs"],
    )


def cmd_characterize(args, limits: Dict[str, int]) -> int:
    from .kripke import save_example_set

    formula = parse_formula(args.formula)
    props = _split_props(args.props) or tuple(sorted(formula.variables))
    fragment = _fragment(args.fragment, props)
    result = _characterize(formula, fragment, args, limits)

    if args.out:
        save_example_set(result, args.out)
        print(f"Wrote {len(result.positive)} positive and {len(result.negative)} negative examples to {args.out}")
    else:
        print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_verify(args, limits: Dict[str, int]) -> int:
    from .kripke import load_example_set
    from .verify import verify_characterization

    formula = parse_formula(args.formula)
    examples = load_example_set(args.examples)
    props = _split_props(args.props) or examples.props
    fragment = _fragment(args.fragment, props)
    report = verify_characterization(
        formula,
        examples,
        fragment,
        args.max_depth,
        max_formulas=limits["max_formulas"],
        max_models=limits["max_models"],
    )
    sys.stdout.write(report.to_json_lines())
    if report.unique:
        print(f"unique up to depth {report.depth_bound} ({report.candidates_checked} candidates)")
        return EXIT_OK
    return EXIT_NO


def cmd_duality(args, limits: Dict[str, int]) -> int:
    from .characterize import check_duality
    from .kripke import enumerate_models, load_example_set

    formula = parse_formula(args.formula)
    examples = load_example_set(args.examples)
    depth = args.universe_depth if args.universe_depth is not None else formula.modal_depth
    universe = enumerate_models(
        examples.props, depth, graft_loops=True, max_models=limits["max_models"]
    )
    report = check_duality(formula, examples, universe)
    for violation in report.violations:
        _print_json(violation.to_dict())
    if report.holds:
        print(f"duality holds on {report.universe_size} models")
        return EXIT_OK
    return EXIT_NO


def cmd_refute(args) -> int:
    from .characterize import refute_bot_fragment, refute_full_language
    from .kripke import load_example_set

    examples = load_example_set(args.examples)
    if args.bot_variant:
        result = refute_bot_fragment(examples, args.fresh)
    else:
        result = refute_full_language(examples)
    print(result.render())
    return EXIT_OK


def cmd_enumerate(args, limits: Dict[str, int]) -> int:
    from .kripke import dumps_model, enumerate_models
    from .syntax import enumerate_formulas

    props = _split_props(args.props)
    if args.what == "models":
        for model in enumerate_models(
            props, args.depth, args.graft_loops, max_models=limits["max_models"]
        ):
            print(dumps_model(model))
    else:
        fragment = _fragment(args.fragment, props)
        for formula in enumerate_formulas(
            fragment,
            args.depth,
            max_formulas=limits["max_formulas"],
            max_models=limits["max_models"],
        ):
            print(formula.render())
    return EXIT_OK


def cmd_learn(args, limits: Dict[str, int]) -> int:
    from .learn import StdioOracle, learn_version_space, simulate_oracle

    props = _split_props(args.props)
    fragment = _fragment(args.fragment, props)
    if args.oracle_formula:
        oracle = simulate_oracle(parse_formula(args.oracle_formula))
        result = learn_version_space(
            fragment, args.depth, oracle, args.graft_loops,
            max_models=limits["max_models"], max_formulas=limits["max_formulas"],
        )
    else:
        with StdioOracle(args.oracle_cmd) as oracle:
            result = learn_version_space(
                fragment, args.depth, oracle, args.graft_loops,
                max_models=limits["max_models"], max_formulas=limits["max_formulas"],
            )
    print(result.render())
    logger.info(f"Queries used: {oracle.queries}")
    return EXIT_OK


def cmd_teach(args) -> int:
    from .learn import answer_queries

    formula = parse_formula(args.formula)
    props = _split_props(args.props) + tuple(formula.variables)
    answer_queries(formula, props, sys.stdin, sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modalchar",
        description="Finite characterizations of modal formulas by examples",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  modalchar check --model m.json --formula "p & q"
  modalchar wsim --source a.json --target b.json --witness
  modalchar characterize --fragment conj-diamond --props p,q,r --formula "p & q"
  modalchar verify --formula "p & q" --examples e.json --fragment conj --max-depth 1
  modalchar refute --examples e.json --bot-variant --fresh q
  modalchar enumerate models --props p --depth 1 --graft-loops
  modalchar learn --fragment conj-diamond --props p --depth 1 --oracle-formula "<>p"
        """,
    )
    parser.add_argument("--version", action="version", version=f"modalchar v{__version__}")
    parser.add_argument("--config", type=Path, help="INI file with a [limits] section")
    parser.add_argument("--log-file", type=Path, help="Also append log records to this file")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--max-models", type=int, help="Budget on enumerated models")
    parser.add_argument("--max-formulas", type=int, help="Budget on enumerated formula classes")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    check = subparsers.add_parser("check", help="Model-check a formula at a pointed model")
    check.add_argument("--model", type=Path, required=True)
    check.add_argument("--formula", required=True)
    check.add_argument("--props", help="Comma-separated ambient propositions")

    for name, text in (
        ("bisim", "Are the two pointed models bisimilar?"),
        ("sim", "Does the target simulate the source?"),
        ("wsim", "Does the target weakly simulate the source?"),
    ):
        rel = subparsers.add_parser(name, help=text)
        rel.add_argument("--source", type=Path, required=True)
        rel.add_argument("--target", type=Path, required=True)
        rel.add_argument("--witness", action="store_true", help="Print the witness relation")
        rel.add_argument("--props", help="Comma-separated ambient propositions")

    char = subparsers.add_parser("characterize", help="Build a finite characterization")
    char.add_argument("--formula", required=True)
    char.add_argument(
        "--fragment",
        default="positive",
        help=f"Preset ({', '.join(FRAGMENT_PRESETS)}) or notation such as pos:&,<>",
    )
    char.add_argument("--props", help="Comma-separated propositions of the fragment")
    char.add_argument("--polarity", help="Per-proposition polarity, e.g. p=pos,q=neg")
    char.add_argument("--verify-depth", type=int, help="Depth bound for the self-check")
    char.add_argument("--out", type=Path, help="Write the example set here")

    ver = subparsers.add_parser("verify", help="Search for competing formulas")
    ver.add_argument("--formula", required=True)
    ver.add_argument("--examples", type=Path, required=True)
    ver.add_argument("--fragment", default="positive")
    ver.add_argument("--props", help="Comma-separated propositions of the fragment")
    ver.add_argument("--max-depth", type=int, help="Depth bound (default depth of formula + 1)")

    dual = subparsers.add_parser("duality", help="Check the duality contract on a universe")
    dual.add_argument("--formula", required=True)
    dual.add_argument("--examples", type=Path, required=True)
    dual.add_argument("--universe-depth", type=int, help="Universe depth (default depth of formula)")

    ref = subparsers.add_parser("refute", help="Find another formula fitting examples of []F")
    ref.add_argument("--examples", type=Path, required=True)
    ref.add_argument("--bot-variant", action="store_true", help="Stay inside the positive fragment with F")
    ref.add_argument("--fresh", help="Fresh proposition for the bot variant")

    enum = subparsers.add_parser("enumerate", help="Enumerate models or formulas")
    enum.add_argument("what", choices=["models", "formulas"])
    enum.add_argument("--props", help="Comma-separated propositions")
    enum.add_argument("--depth", type=int, required=True)
    enum.add_argument("--graft-loops", action="store_true")
    enum.add_argument("--fragment", default="positive")

    learn = subparsers.add_parser("learn", help="Learn a hidden formula from membership queries")
    learn.add_argument("--fragment", default="conj-diamond")
    learn.add_argument("--props", help="Comma-separated propositions")
    learn.add_argument("--depth", type=int, required=True)
    learn.add_argument("--graft-loops", action="store_true")
    oracle = learn.add_mutually_exclusive_group(required=True)
    oracle.add_argument("--oracle-formula", help="Answer queries by evaluating this formula")
    oracle.add_argument("--oracle-cmd", help="Oracle process speaking the stdio protocol")

    teach = subparsers.add_parser("teach", help="Answer membership queries on stdin/stdout")
    teach.add_argument("--formula", required=True)
    teach.add_argument("--props", help="Comma-separated propositions")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_ERROR

    try:
        setup_logging(args.verbose, args.log_file)
        limits = load_settings([args.config] if args.config else None)
        if args.max_models is not None:
            limits["max_models"] = args.max_models
        if args.max_formulas is not None:
            limits["max_formulas"] = args.max_formulas

        if args.command == "check":
            return cmd_check(args)
        elif args.command in ("bisim", "sim", "wsim"):
            return cmd_relation(args)
        elif args.command == "characterize":
            return cmd_characterize(args, limits)
        elif args.command == "verify":
            return cmd_verify(args, limits)
        elif args.command == "duality":
            return cmd_duality(args, limits)
        elif args.command == "refute":
            return cmd_refute(args)
        elif args.command == "enumerate":
            return cmd_enumerate(args, limits)
        elif args.command == "learn":
            return cmd_learn(args, limits)
        elif args.command == "teach":
            return cmd_teach(args)
        else:
            parser.print_help()
            return EXIT_ERROR

    except KeyboardInterrupt:
        print("\nOperation cancelled by user.", file=sys.stderr)
        return EXIT_ERROR
    except (ModalCharError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
