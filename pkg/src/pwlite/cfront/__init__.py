"""C frontend: preprocessing, parsing, source spans, SLOC."""

from .astnodes import (ATTACHING_DIRECTIVES, AstNode, Declarator, OmpDirective,
                       parse_omp_directive)
from .lexer import Token, tokenize
from .parser import Parser, parse_translation_unit
from .preprocessor import Preprocessor, preprocess, strip_comments
from .sloc import count_sloc
from .source import SourceFile, Span

__all__ = [
    "ATTACHING_DIRECTIVES", "AstNode", "Declarator", "OmpDirective",
    "Parser", "Preprocessor", "SourceFile", "Span", "Token",
    "count_sloc", "parse_omp_directive", "parse_translation_unit",
    "preprocess", "strip_comments", "tokenize",
]
