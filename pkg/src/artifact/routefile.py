"""Declarative route file: `route { ... }` entries defining engine routes.

Grammar, one or more entries::

    route {
      from = "<uri>"
      set_header "<key>" = "<value>"     # zero or more, order preserved
      transform = "<expression>"         # optional
      to = "<uri>"
    }

Statements are separated by newlines or semicolons; `#` starts a comment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import RouteFileError
from .exprlang import parse_expr
from .routing import Processor, Route, RoutingEngine, SetHeader, Transform


@dataclass
class RouteFileEntry:
    source: str
    sink: str
    set_headers: list[tuple[str, str]] = field(default_factory=list)
    transform: str | None = None

    def processors(self) -> list[Processor]:
        chain: list[Processor] = [SetHeader(k, v) for k, v in self.set_headers]
        if self.transform is not None:
            chain.append(Transform(parse_expr(self.transform)))
        return chain


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "string", "punct"
    text: str
    line: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            tokens.append(_Token("punct", ";", line))
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif c == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "{}=;":
            tokens.append(_Token("punct", c, line))
            i += 1
        elif c == '"':
            j = i + 1
            out: list[str] = []
            while j < len(text):
                if text[j] == "\\" and j + 1 < len(text):
                    out.append(text[j + 1])
                    j += 2
                elif text[j] == '"':
                    break
                elif text[j] == "\n":
                    raise RouteFileError(line, "unterminated string")
                else:
                    out.append(text[j])
                    j += 1
            else:
                raise RouteFileError(line, "unterminated string")
            tokens.append(_Token("string", "".join(out), line))
            i = j + 1
        elif c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line))
            i = j
        else:
            raise RouteFileError(line, f"unexpected character {c!r}")
    return tokens


class _EntryParser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._i = 0

    def _peek(self) -> _Token | None:
        if self._i < len(self._tokens):
            return self._tokens[self._i]
        return None

    def _take(self) -> _Token:
        token = self._tokens[self._i]
        self._i += 1
        return token

    def _skip_separators(self) -> None:
        while self._i < len(self._tokens):
            token = self._tokens[self._i]
            if token.kind == "punct" and token.text == ";":
                self._i += 1
            else:
                break

    def _expect(self, kind: str, text: str | None, what: str) -> _Token:
        token = self._peek()
        if token is None:
            last = self._tokens[-1].line if self._tokens else 1
            raise RouteFileError(last, f"expected {what}, got end of file")
        if token.kind != kind or (text is not None and token.text != text):
            raise RouteFileError(token.line, f"expected {what}, got {token.text!r}")
        return self._take()

    def parse(self) -> list[RouteFileEntry]:
        entries = []
        self._skip_separators()
        while self._peek() is not None:
            entries.append(self._entry())
            self._skip_separators()
        return entries

    def _entry(self) -> RouteFileEntry:
        self._expect("ident", "route", "'route'")
        self._expect("punct", "{", "'{'")
        source = sink = transform = None
        headers: list[tuple[str, str]] = []
        while True:
            self._skip_separators()
            token = self._peek()
            if token is None:
                raise RouteFileError(self._tokens[-1].line, "expected '}', got end of file")
            if token.kind == "punct" and token.text == "}":
                self._take()
                break
            if token.kind != "ident":
                raise RouteFileError(token.line, f"expected a statement, got {token.text!r}")
            stmt = self._take()
            if stmt.text in ("from", "to", "transform"):
                self._expect("punct", "=", "'='")
                value = self._expect("string", None, "a quoted value").text
                if stmt.text == "from":
                    source = value
                elif stmt.text == "to":
                    sink = value
                else:
                    transform = value
            elif stmt.text == "set_header":
                key = self._expect("string", None, "a quoted header name").text
                self._expect("punct", "=", "'='")
                headers.append((key, self._expect("string", None, "a quoted value").text))
            else:
                raise RouteFileError(stmt.line, f"unknown statement {stmt.text!r}")
        if source is None:
            raise RouteFileError(self._tokens[self._i - 1].line, "route entry has no 'from'")
        if sink is None:
            raise RouteFileError(self._tokens[self._i - 1].line, "route entry has no 'to'")
        return RouteFileEntry(source=source, sink=sink, set_headers=headers, transform=transform)


def parse_route_file(text: str) -> list[RouteFileEntry]:
    return _EntryParser(_tokenize(text)).parse()


def load_route_file(path: str | Path) -> list[RouteFileEntry]:
    return parse_route_file(Path(path).read_text(encoding="utf-8"))


def define_routes(engine: RoutingEngine, entries: list[RouteFileEntry]) -> list[Route]:
    return [
        engine.define_route(entry.source, entry.processors(), entry.sink)
        for entry in entries
    ]
