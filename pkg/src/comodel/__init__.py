"""comodel: compile and simulate executable state-machine models.

Pipeline: parse a model plus marks and scenarios (`frontend`), validate
it (`ir`), execute it under run-to-completion semantics (`executor`),
split it into hardware/software halves and co-simulate them
(`partition`), and emit C and VHDL text from one interface manifest
(`codegen`). The `cli` module binds everything into one command.
"""

from .ir import Model, Scenario, MarkSet, validate, resolve
from .frontend import ParseError, parse_model, parse_marks, parse_scenario, print_model

__all__ = [
    "Model",
    "Scenario",
    "MarkSet",
    "validate",
    "resolve",
    "ParseError",
    "parse_model",
    "parse_marks",
    "parse_scenario",
    "print_model",
]

__version__ = "0.1.0"
