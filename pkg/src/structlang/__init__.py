"""Role-binding expressions with tensor-product and holographic embeddings."""

from .errors import IoError, StructLangError
from .semantics import MISS, Miss, Structure, evaluate, print_value, unbind_one
from .syntax import (
    Alphabet,
    Bind,
    Expr,
    LexError,
    ParseError,
    Query,
    Sum,
    Sym,
    parse,
    parse_text,
    print_expr,
    tokenize,
)

__all__ = [
    "Alphabet",
    "Bind",
    "Expr",
    "IoError",
    "LexError",
    "MISS",
    "Miss",
    "ParseError",
    "Query",
    "StructLangError",
    "Structure",
    "Sum",
    "Sym",
    "evaluate",
    "parse",
    "parse_text",
    "print_expr",
    "print_value",
    "tokenize",
    "unbind_one",
]
