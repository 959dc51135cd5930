"""Text form of the pattern language: a small SPARQL-like SELECT grammar.

    query      = "SELECT" projection "WHERE" "{" body "}" [group] [limit]
    projection = "*" | item+
    item       = var | "(" AGG "(" var ")" "AS" var ")"
    AGG        = "MIN" | "MAX" | "AVG" | "COUNT"
    body       = (triple "." | filter)*        (final "." optional)
    triple     = term term term
    filter     = "FILTER" "(" operand cmp operand ")"
    term       = var | "<" iri ">" | literal
    literal    = number | quoted string | "true" | "false"
    cmp        = "<" | "<=" | ">" | ">=" | "=" | "!="
    group      = "GROUP" "BY" var+
    limit      = "LIMIT" integer
    var        = "?" name

Keywords are case-insensitive. Projecting plain variables next to a MIN or
MAX aggregate (without GROUP BY) returns them from the row attaining the
extremum; with AVG/COUNT such witness columns are rejected.
"""

from __future__ import annotations

import re
from typing import Optional

from provtrace.store.pattern import Aggregate, Filter, Pattern, PatternError, TriplePattern, Var
from provtrace.store.terms import Iri


class QueryParseError(ValueError):
    """Syntax error; ``position`` is the character offset in the query text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<iri><[^<>\s]*>)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<string>"(\\.|[^"\\])*"|'(\\.|[^'\\])*')
  | (?P<cmp><=|>=|!=|=|<|>)
  | (?P<punct>[{}().*])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"select", "where", "filter", "group", "by", "limit", "as", "min", "max", "avg", "count", "true", "false"}


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QueryParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _unquote(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t", "r": "\r"}.get(m.group(1), m.group(1)), body)


def _number(raw: str):
    if re.fullmatch(r"[+-]?\d+", raw):
        return int(raw)
    return float(raw)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.peek()
        raise QueryParseError(message, tok.pos)

    def expect_word(self, word: str) -> None:
        tok = self.next()
        if tok.kind != "word" or tok.text.lower() != word:
            self.error(f"expected {word.upper()}", tok)

    def expect_punct(self, ch: str) -> None:
        tok = self.next()
        if (tok.kind == "punct" and tok.text == ch) or (tok.kind == "cmp" and tok.text == ch):
            return
        self.error(f"expected {ch!r}", tok)

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.text.lower() == word

    def parse_term(self):
        tok = self.next()
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "iri":
            if len(tok.text) < 3:
                self.error("empty IRI", tok)
            return Iri(tok.text[1:-1])
        if tok.kind == "number":
            return _number(tok.text)
        if tok.kind == "string":
            return _unquote(tok.text)
        if tok.kind == "word" and tok.text.lower() in ("true", "false"):
            return tok.text.lower() == "true"
        self.error("expected a variable, IRI, or literal", tok)

    def parse(self) -> Pattern:
        self.expect_word("select")
        projection: Optional[list[str]] = None
        aggregate: Optional[Aggregate] = None
        star = False
        items: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "var":
                items.append(self.next().text[1:])
                continue
            if tok.kind == "punct" and tok.text == "*":
                star = True
                self.next()
                continue
            if tok.kind == "punct" and tok.text == "(":
                self.next()
                agg_tok = self.next()
                if agg_tok.kind != "word" or agg_tok.text.lower() not in ("min", "max", "avg", "count"):
                    self.error("expected MIN, MAX, AVG, or COUNT", agg_tok)
                self.expect_punct("(")
                over = self.next()
                if over.kind != "var":
                    self.error("aggregate needs a variable", over)
                self.expect_punct(")")
                self.expect_word("as")
                alias = self.next()
                if alias.kind != "var":
                    self.error("AS needs a variable", alias)
                self.expect_punct(")")
                if aggregate is not None:
                    self.error("only one aggregate per query", agg_tok)
                aggregate = Aggregate(op=agg_tok.text.lower(), over=Var(over.text[1:]), as_name=alias.text[1:])
                items.append(alias.text[1:])
                continue
            if tok.kind == "word" and tok.text.lower() == "where":
                break
            self.error("expected ?var, *, aggregate, or WHERE", tok)
        if not star and not items:
            self.error("projection is empty")
        if not star:
            projection = items

        self.expect_word("where")
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[Filter] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "}":
                self.next()
                break
            if tok.kind == "eof":
                self.error("unterminated WHERE block", tok)
            if tok.kind == "word" and tok.text.lower() == "filter":
                self.next()
                self.expect_punct("(")
                lhs = self.parse_term()
                op_tok = self.next()
                if op_tok.kind != "cmp":
                    self.error("expected a comparison operator", op_tok)
                rhs = self.parse_term()
                self.expect_punct(")")
                filters.append(Filter(lhs, op_tok.text, rhs))
            else:
                s = self.parse_term()
                p = self.parse_term()
                o = self.parse_term()
                patterns.append(TriplePattern(s, p, o))
            if self.peek().kind == "punct" and self.peek().text == ".":
                self.next()

        group_by: tuple[Var, ...] = ()
        if self.at_word("group"):
            self.next()
            self.expect_word("by")
            names = []
            while self.peek().kind == "var":
                names.append(Var(self.next().text[1:]))
            if not names:
                self.error("GROUP BY needs at least one variable")
            group_by = tuple(names)
            if aggregate is None:
                self.error("GROUP BY without an aggregate")
            aggregate = Aggregate(op=aggregate.op, over=aggregate.over, group_by=group_by, as_name=aggregate.as_name)

        limit = None
        if self.at_word("limit"):
            self.next()
            tok = self.next()
            if tok.kind != "number" or not re.fullmatch(r"\d+", tok.text):
                self.error("LIMIT needs a non-negative integer", tok)
            limit = int(tok.text)

        tok = self.peek()
        if tok.kind != "eof":
            self.error("trailing input", tok)

        if aggregate and aggregate.op in ("avg", "count") and projection:
            extra = [n for n in projection if n != aggregate.column and n not in {g.name for g in aggregate.group_by}]
            if extra:
                raise PatternError(f"{aggregate.op} cannot carry witness columns {extra}")
        return Pattern(patterns=patterns, filters=filters, aggregate=aggregate, projection=projection, limit=limit)


def parse_query(text: str) -> Pattern:
    """Parse query text; raises QueryParseError with position on bad syntax."""
    return _Parser(text).parse()
