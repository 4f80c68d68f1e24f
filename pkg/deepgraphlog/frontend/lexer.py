"""
Tokenizer for .dgl source text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from ..errors import ParseError, SourceLocation


class TokenKind(str, Enum):
    NUMBER = "number"
    NAME = "name"
    VARIABLE = "variable"
    QUOTED = "quoted"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int

    def location(self, file: Optional[str] = None) -> SourceLocation:
        return SourceLocation(self.line, self.column, file)

    def is_punct(self, text: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.text == text


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<variable>[A-Z_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\\n]|\\.)*')
  | (?P<punct>::|:-|[()\[\],.;/#=])
    """,
    re.VERBOSE,
)


def tokenize(source: str, file: Optional[str] = None) -> List[Token]:
    """Split source text into tokens; ``%`` starts a comment running to end of line."""
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    length = len(source)
    while pos < length:
        m = _TOKEN_RE.match(source, pos)
        column = pos - line_start + 1
        if m is None:
            bad = source[pos]
            raise ParseError(
                f"unexpected character {bad!r}",
                location=SourceLocation(line, column, file),
                token=bad,
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "quoted":
            tokens.append(Token(TokenKind.QUOTED, _unquote(text), line, column))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(TokenKind(kind), text, line, column))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token(TokenKind.EOF, "", line, pos - line_start + 1))
    return tokens


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)
