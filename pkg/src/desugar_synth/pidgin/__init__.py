"""The Pidgin challenge languages: syntax, interpreters and reference desugaring."""

from .interp import CoreInterpreter, SourceInterpreter, eval_core, eval_source
from .oracle import Gensym, desugar_outcome, expand_macros, oracle_desugar
from .syntax import (
    LANGUAGES,
    PIDGIN,
    PIDGIN_LISTCOMP,
    PIDGIN_TRYCATCH,
    LanguagePair,
    language,
)

__all__ = [
    "CoreInterpreter", "SourceInterpreter", "eval_core", "eval_source",
    "Gensym", "desugar_outcome", "expand_macros", "oracle_desugar",
    "LANGUAGES", "PIDGIN", "PIDGIN_LISTCOMP", "PIDGIN_TRYCATCH", "LanguagePair", "language",
]
