"""Parser and elaborator for the gate-level assembly subset.

Supported forms::

    from File.Class usepulses *
    register q[3]
    G q[2]                  // gate call: name, then qubit refs or numbers
    loop 4 { G q[2] }       // counted loop over a sequential block
    < X q[1] | Y q[2] >     // parallel block
    { A q[0]; B q[1] }      // sequential block

Statements are separated by newlines or ``;``; ``|`` also separates the
branches of a parallel block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .definitions import DefinitionError, DefinitionSet, Qubit, instantiate
from .lexer import SourceError, TokenStream, describe, number_value, tokenize
from .schedule import ParallelGroup


@dataclass(frozen=True)
class QubitRef:
    register: str
    index: int


@dataclass(frozen=True)
class GateCall:
    name: str
    args: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Block:
    statements: tuple
    parallel: bool = False


@dataclass(frozen=True)
class Loop:
    count: int
    body: Block


@dataclass(frozen=True)
class Program:
    usepulses: str | None
    register: tuple | None  # (name, size)
    body: tuple


class _Parser:
    def __init__(self, text: str, filename: str):
        self.ts = TokenStream(tokenize(text, filename), filename)
        self.usepulses: str | None = None
        self.register: tuple | None = None

    def parse(self) -> Program:
        ts = self.ts
        body = []
        ts.skip_newlines()
        while not ts.at("EOF"):
            if ts.at("IDENT", "from"):
                self.header()
            elif ts.at("IDENT", "register"):
                self.register_decl()
            else:
                body.append(self.statement())
            self.separator(("EOF",))
            ts.skip_newlines()
        return Program(self.usepulses, self.register, tuple(body))

    def separator(self, closers):
        ts = self.ts
        if ts.peek.kind in ("NEWLINE", ";") or ts.peek.kind in closers:
            return
        ts.fail(f"expected end of statement, found {describe(ts.peek)}")

    def header(self):
        ts = self.ts
        kw = ts.next()
        if self.usepulses is not None:
            ts.fail("only one usepulses import is supported", kw)
        parts = [ts.expect("IDENT", what="module name").text]
        while ts.accept("."):
            parts.append(ts.expect("IDENT", what="name after '.'").text)
        ts.expect("IDENT", "usepulses", "'usepulses'")
        ts.expect("*", what="'*' (only wildcard imports are supported)")
        self.usepulses = ".".join(parts)

    def register_decl(self):
        ts = self.ts
        kw = ts.next()
        if self.register is not None:
            ts.fail("only a single register is supported", kw)
        name = ts.expect("IDENT", what="register name")
        ts.expect("[")
        size_tok = ts.expect("NUMBER", what="register size")
        size = number_value(size_tok.text)
        if not isinstance(size, int) or size < 1:
            ts.fail("register size must be a positive integer", size_tok)
        ts.expect("]")
        self.register = (name.text, size)

    def statement(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind == "IDENT" and tok.text == "loop":
            ts.next()
            if ts.at("-"):
                ts.fail("loop count must be a non-negative integer")
            count_tok = ts.expect("NUMBER", what="loop count")
            count = number_value(count_tok.text)
            if not isinstance(count, int):
                ts.fail("loop count must be a non-negative integer", count_tok)
            if ts.at("{"):
                body = self.block()
            elif ts.at("<"):
                body = Block((self.parallel(),))
            else:
                ts.fail(f"expected '{{' or '<' after loop count, found {describe(ts.peek)}")
            return Loop(count, body)
        if tok.kind == "{":
            return self.block()
        if tok.kind == "<":
            return self.parallel()
        if tok.kind == "IDENT":
            if tok.text in ("from", "register"):
                ts.fail(f"'{tok.text}' is only allowed at top level")
            return self.gate()
        ts.fail(f"expected a statement, found {describe(tok)}")

    def block(self) -> Block:
        ts = self.ts
        ts.expect("{")
        stmts = []
        ts.skip_newlines()
        while not ts.at("}"):
            if ts.at("EOF"):
                ts.fail("unterminated block, expected '}'")
            stmts.append(self.statement())
            self.separator(("}",))
            ts.skip_newlines()
        ts.next()
        return Block(tuple(stmts))

    def parallel(self) -> Block:
        ts = self.ts
        ts.expect("<")
        stmts = []
        ts.skip_newlines(also=(";", "|"))
        while not ts.at(">"):
            if ts.at("EOF"):
                ts.fail("unterminated parallel block, expected '>'")
            stmts.append(self.statement())
            self.separator((">", "|"))
            ts.skip_newlines(also=(";", "|"))
        ts.next()
        return Block(tuple(stmts), parallel=True)

    def gate(self) -> GateCall:
        ts = self.ts
        name = ts.next()
        args = []
        while True:
            tok = ts.peek
            if tok.kind == "IDENT":
                ts.next()
                ts.expect("[", what=f"'[' after register name {tok.text!r}")
                idx_tok = ts.expect("NUMBER", what="qubit index")
                idx = number_value(idx_tok.text)
                if not isinstance(idx, int):
                    ts.fail("qubit index must be an integer", idx_tok)
                ts.expect("]")
                if self.register is None:
                    ts.fail(f"register {tok.text!r} used before any register declaration", tok)
                if tok.text != self.register[0]:
                    ts.fail(f"undeclared register {tok.text!r}", tok)
                if idx >= self.register[1]:
                    ts.fail(f"qubit index {idx} out of range for {tok.text}[{self.register[1]}]", idx_tok)
                args.append(QubitRef(tok.text, idx))
            elif tok.kind in ("NUMBER", "-", "+"):
                sign = 1
                if tok.kind in "-+":
                    ts.next()
                    sign = -1 if tok.kind == "-" else 1
                num = ts.expect("NUMBER", what="number")
                args.append(sign * number_value(num.text))
            else:
                break
        return GateCall(name.text, tuple(args), name.line, name.col)


def parse(source: str, filename: str = "<program>") -> Program:
    """Parse assembly text; raises :class:`SourceError` with a position."""
    return _Parser(source, filename).parse()


def pretty_print(program: Program) -> str:
    lines = []
    if program.usepulses:
        lines.append(f"from {program.usepulses} usepulses *")
    if program.register:
        lines.append(f"register {program.register[0]}[{program.register[1]}]")
    if lines:
        lines.append("")
    for stmt in program.body:
        lines.extend(_format(stmt, 0))
    return "\n".join(lines) + "\n"


def _format_arg(a) -> str:
    if isinstance(a, QubitRef):
        return f"{a.register}[{a.index}]"
    return repr(a)


def _format(stmt, depth: int) -> list[str]:
    pad = "    " * depth
    if isinstance(stmt, GateCall):
        return [pad + " ".join([stmt.name, *(_format_arg(a) for a in stmt.args)])]
    if isinstance(stmt, Loop):
        inner = _format_block(stmt.body, depth)
        return [pad + f"loop {stmt.count} " + inner[0].lstrip(), *inner[1:]]
    return _format_block(stmt, depth)


def _format_block(block: Block, depth: int) -> list[str]:
    pad = "    " * depth
    if block.parallel:
        parts = [_format(s, depth + 1) for s in block.statements]
        if all(len(p) == 1 for p in parts):
            return [pad + "< " + " | ".join(p[0].strip() for p in parts) + " >"]
        out = [pad + "<"]
        for p in parts:
            out.extend(p)
        return out + [pad + ">"]
    out = [pad + "{"]
    for s in block.statements:
        out.extend(_format(s, depth + 1))
    return out + [pad + "}"]


# -- elaboration --------------------------------------------------------------

class ElaborationError(DefinitionError):
    pass


def elaborate(program: Program, defs: DefinitionSet, calib: dict, filename: str = "<program>") -> list:
    """Turn a parsed program into the block stream the scheduler consumes.

    Loops are unrolled; parallel blocks become :class:`ParallelGroup`.
    """
    gates = defs.gates()
    return _elab_seq(program.body, gates, defs, calib, filename)


def _elab_seq(stmts, gates, defs, calib, filename) -> list:
    out = []
    for stmt in stmts:
        out.extend(_elab(stmt, gates, defs, calib, filename))
    return out


def _elab(stmt, gates, defs, calib, filename) -> list:
    if isinstance(stmt, GateCall):
        defn = gates.get(stmt.name)
        if defn is None:
            raise ElaborationError(f"unknown gate {stmt.name!r}", stmt.line, stmt.col, filename)
        args = [Qubit(a.index) if isinstance(a, QubitRef) else a for a in stmt.args]
        if len(args) != len(defn.params):
            raise ElaborationError(
                f"gate {stmt.name} expects {len(defn.params)} argument(s), got {len(args)}",
                stmt.line,
                stmt.col,
                filename,
            )
        return [instantiate(defn, args, calib, defs)]
    if isinstance(stmt, Loop):
        once = _elab(stmt.body, gates, defs, calib, filename)
        return once * stmt.count
    if stmt.parallel:
        branches = tuple(tuple(_elab(s, gates, defs, calib, filename)) for s in stmt.statements)
        return [ParallelGroup(branches)]
    return _elab_seq(stmt.statements, gates, defs, calib, filename)


__all__ = [
    "Block",
    "ElaborationError",
    "GateCall",
    "Loop",
    "Program",
    "QubitRef",
    "SourceError",
    "elaborate",
    "parse",
    "pretty_print",
]
