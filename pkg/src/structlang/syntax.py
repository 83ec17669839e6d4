"""Tokenizer, AST, parser, and printer for role-binding expressions.

Grammar (':' binds tightest, then '+', then '?'; '?' chains left-associatively):

    expr     := sum ('?' rolepath)*
    sum      := term ('+' term)*
    term     := primary (':' ROLE)*
    primary  := SYMBOL | '(' expr ')'
    rolepath := ROLE (':' ROLE)*

Role paths are stored innermost-first: in ``b:L:R`` the stored path is
``(L, R)`` and R is the outermost (root-nearest) role.  The miss sentinel
'$' lexes but is rejected by the parser; it only ever appears in output.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum, auto

from .errors import StructLangError


class TokenKind(Enum):
    SYMBOL = auto()
    ROLE = auto()
    COLON = auto()
    PLUS = auto()
    QUERY = auto()
    LPAREN = auto()
    RPAREN = auto()
    MISS = auto()


_OPERATORS = {
    ":": TokenKind.COLON,
    "+": TokenKind.PLUS,
    "?": TokenKind.QUERY,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "$": TokenKind.MISS,
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    pos: int


@dataclass(frozen=True)
class Alphabet:
    """Lexical shapes of symbol and role names."""

    symbol_pattern: str = r"[a-z]{2}"
    role_pattern: str = r"[A-Z]"


DEFAULT_ALPHABET = Alphabet()


class LexError(StructLangError):
    def __init__(self, position: int, fragment: str):
        self.position = position
        self.fragment = fragment
        super().__init__(f"cannot lex input at position {position}: {fragment!r}")


class ParseError(StructLangError):
    def __init__(self, position: int, expected: str, found: str):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"at position {position}: expected {expected}, found {found}")


def tokenize(text: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> list[Token]:
    """Split text into tokens, skipping whitespace.

    Raises LexError on the first character that starts no token.
    """
    sym_re = re.compile(alphabet.symbol_pattern)
    role_re = re.compile(alphabet.role_pattern)
    tokens: list[Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPERATORS:
            tokens.append(Token(_OPERATORS[ch], ch, i))
            i += 1
            continue
        m_sym = sym_re.match(text, i)
        m_role = role_re.match(text, i)
        # longest match wins; symbol wins a tie
        best_kind = None
        best_text = ""
        if m_sym and len(m_sym.group()) >= len(best_text):
            best_kind, best_text = TokenKind.SYMBOL, m_sym.group()
        if m_role and len(m_role.group()) > len(best_text):
            best_kind, best_text = TokenKind.ROLE, m_role.group()
        if best_kind is None or not best_text:
            raise LexError(i, text[i : i + 8])
        tokens.append(Token(best_kind, best_text, i))
        i += len(best_text)
    return tokens


# --- AST ---------------------------------------------------------------

RolePath = tuple[str, ...]


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Bind:
    child: "Expr"
    role: str


@dataclass(frozen=True)
class Sum:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Query:
    subject: "Expr"
    path: RolePath  # innermost-first, same storage order as bindings


Expr = Sym | Bind | Sum | Query


class Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.index = 0

    def at_end(self) -> bool:
        return self.index >= len(self.tokens)

    def peek(self) -> Token | None:
        return None if self.at_end() else self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def match(self, kind: TokenKind) -> bool:
        if not self.at_end() and self.tokens[self.index].kind is kind:
            self.index += 1
            return True
        return False

    def expect(self, kind: TokenKind, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._end_pos(), what, "end of input")
        if tok.kind is not kind:
            raise ParseError(tok.pos, what, repr(tok.text))
        return self.advance()

    def _end_pos(self) -> int:
        if not self.tokens:
            return 0
        last = self.tokens[-1]
        return last.pos + len(last.text)

    def parse_expr(self) -> Expr:
        node = self.parse_sum()
        while self.match(TokenKind.QUERY):
            node = Query(node, self.parse_rolepath())
        return node

    def parse_sum(self) -> Expr:
        node = self.parse_term()
        while self.match(TokenKind.PLUS):
            node = Sum(node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_primary()
        while self.match(TokenKind.COLON):
            node = Bind(node, self.expect(TokenKind.ROLE, "a role").text)
        return node

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._end_pos(), "a symbol or '('", "end of input")
        if tok.kind is TokenKind.SYMBOL:
            return Sym(self.advance().text)
        if tok.kind is TokenKind.LPAREN:
            self.advance()
            node = self.parse_expr()
            self.expect(TokenKind.RPAREN, "')'")
            return node
        if tok.kind is TokenKind.MISS:
            raise ParseError(tok.pos, "a symbol or '('", "'$' (output-only)")
        raise ParseError(tok.pos, "a symbol or '('", repr(tok.text))

    def parse_rolepath(self) -> RolePath:
        atoms = [self.expect(TokenKind.ROLE, "a role").text]
        while self.match(TokenKind.COLON):
            atoms.append(self.expect(TokenKind.ROLE, "a role").text)
        return tuple(atoms)


def parse(tokens: list[Token]) -> Expr:
    """Parse a token list into an Expr; the whole list must be consumed."""
    parser = Parser(tokens)
    node = parser.parse_expr()
    tok = parser.peek()
    if tok is not None:
        raise ParseError(tok.pos, "end of input", repr(tok.text))
    return node


def parse_text(text: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> Expr:
    return parse(tokenize(text, alphabet))


# --- printing ----------------------------------------------------------

# precedence levels: higher binds tighter
_PREC_QUERY = 0
_PREC_SUM = 1
_PREC_TERM = 2


def _prec(e: Expr) -> int:
    if isinstance(e, Query):
        return _PREC_QUERY
    if isinstance(e, Sum):
        return _PREC_SUM
    return _PREC_TERM


def _wrap(e: Expr, minimum: int) -> str:
    text = print_expr(e)
    if _prec(e) < minimum:
        return f"({text})"
    return text


def print_expr(e: Expr) -> str:
    """Canonical text: minimal parentheses, ':' tight, spaces around '+' and '?'."""
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Bind):
        return f"{_wrap(e.child, _PREC_TERM)}:{e.role}"
    if isinstance(e, Sum):
        # '+' is left-associative, so only the right operand needs guarding
        return f"{_wrap(e.left, _PREC_SUM)} + {_wrap(e.right, _PREC_TERM)}"
    if isinstance(e, Query):
        return f"{_wrap(e.subject, _PREC_QUERY)} ? {':'.join(e.path)}"
    raise TypeError(f"not an Expr: {e!r}")


def expr_to_dict(e: Expr) -> dict:
    """JSON-friendly AST dump."""
    if isinstance(e, Sym):
        return {"node": "sym", "name": e.name}
    if isinstance(e, Bind):
        return {"node": "bind", "child": expr_to_dict(e.child), "role": e.role}
    if isinstance(e, Sum):
        return {"node": "sum", "left": expr_to_dict(e.left), "right": expr_to_dict(e.right)}
    if isinstance(e, Query):
        return {"node": "query", "subject": expr_to_dict(e.subject), "path": list(e.path)}
    raise TypeError(f"not an Expr: {e!r}")
