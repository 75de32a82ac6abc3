"""
modalchar - finite characterizations of modal formulas by examples

A Python package that:
- Model-checks NNF modal formulas on finite Kripke models
- Decides bisimulation, simulation and weak simulation with witnesses
- Builds, verifies and refutes finite characterizations (example sets)
- Learns hidden formulas from membership queries

License: MIT
"""

__version__ = "0.3.0"
__license__ = "MIT"

from .errors import ModalCharError
from .kripke import ExampleSet, KripkeModel, PointedModel
from .semantics import equivalent, fits, satisfies
from .syntax import Formula, Fragment, parse_formula, parse_fragment

__all__ = [
    "ModalCharError",
    "ExampleSet",
    "KripkeModel",
    "PointedModel",
    "Formula",
    "Fragment",
    "parse_formula",
    "parse_fragment",
    "satisfies",
    "fits",
    "equivalent",
]
