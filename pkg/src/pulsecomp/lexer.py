"""Tokenizer shared by the assembly and pulse-definition parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass


class SourceError(Exception):
    """A diagnostic tied to a position in some source text."""

    def __init__(self, message: str, line: int, col: int, filename: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(f"{filename}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, NEWLINE, EOF or the punctuation itself
    text: str
    line: int
    col: int


_NUMBER = re.compile(
    r"0[bB][01_]+|0[xX][0-9a-fA-F_]+|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = "()[]{}<>|,=+-*/;:."


def tokenize(text: str, filename: str = "<input>", comments=("//",)) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            tokens.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line, col = line + 1, 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if any(text.startswith(c, i) for c in comments):
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NUMBER.match(text, i)
        if m and (ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit())):
            tokens.append(Token("NUMBER", m.group(), line, col))
        elif (m := _IDENT.match(text, i)):
            tokens.append(Token("IDENT", m.group(), line, col))
        elif ch in _PUNCT:
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        else:
            raise SourceError(f"unexpected character {ch!r}", line, col, filename)
        i += len(m.group())
        col += len(m.group())
    tokens.append(Token("EOF", "", line, col))
    return tokens


def number_value(text: str):
    """Python value of a NUMBER token: int for integer literals, else float."""
    t = text.replace("_", "")
    if t[:2].lower() == "0b":
        return int(t[2:], 2)
    if t[:2].lower() == "0x":
        return int(t[2:], 16)
    if re.fullmatch(r"\d+", t):
        return int(t)
    return float(t)


class TokenStream:
    """Cursor over a token list with positioned error helpers."""

    def __init__(self, tokens: list[Token], filename: str = "<input>"):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def peek_at(self, offset: int) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if self.at(kind, text):
            return self.next()
        want = what or repr(text if text is not None else kind)
        self.fail(f"expected {want}, found {describe(self.peek)}")

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek
        raise SourceError(message, tok.line, tok.col, self.filename)

    def skip_newlines(self, also=(";",)):
        while self.peek.kind == "NEWLINE" or self.peek.kind in also:
            self.next()


def describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "NEWLINE":
        return "end of line"
    return repr(tok.text)
