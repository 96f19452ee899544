"""Declarative pulse-definition files and calibration sets.

A definition file holds one or more named sets of gates::

    pulses GatePulse {
        pi_time = 1.25e-6              // default, calibration may override
        gate_G(q: qubit) {
            PulseData(q, pi_time, freq0=200e6, amp0=50)
        }
    }

Only definitions whose name starts with ``gate_`` are visible to assembly
programs, under the name with the prefix removed. The full grammar lives in
``docs/formats.md``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import discretize as dz
from .core import GLOBAL_BEAM, MASKS, SOURCE_PARAMS, PulseRecord
from .lexer import Token, TokenStream, describe, number_value, tokenize
from .schedule import CompileError, GateBlock

GATE_PREFIX = "gate_"
PARAM_KINDS = ("qubit", "number")
PULSE_KEYWORDS = SOURCE_PARAMS + MASKS + ("waittrig",)


class DefinitionError(CompileError):
    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<defs>"):
        self.line, self.col = line, col
        where = f"{filename}:{line}:{col}: " if line else ""
        super().__init__(where + message)


# -- expression tree ----------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class Num(Expr):
    value: object


@dataclass(frozen=True)
class Name(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple
    kwargs: tuple = ()


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple


@dataclass(frozen=True)
class TupleLit(Expr):
    items: tuple


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Emit:
    """A ``PulseData(...)`` statement."""

    args: tuple
    kwargs: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Invoke:
    """Inline the pulses of another definition in the same set."""

    name: str
    args: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


def free_names(node, bound=frozenset()) -> set:
    if isinstance(node, Name):
        return set() if node.name in bound else {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_names(node.operand, bound)
    if isinstance(node, BinOp):
        return free_names(node.left, bound) | free_names(node.right, bound)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_names(a, bound)
        for _, a in node.kwargs:
            out |= free_names(a, bound)
        return out
    if isinstance(node, (ListLit, TupleLit)):
        out = set()
        for a in node.items:
            out |= free_names(a, bound)
        return out
    raise TypeError(node)


# -- values -------------------------------------------------------------------

@dataclass(frozen=True)
class Qubit:
    index: int

    @property
    def channel(self) -> int:
        return self.index + 1


@dataclass(frozen=True)
class Channel:
    index: int


class Exact:
    """A value sitting exactly on the hardware grid.

    Sums, differences and integer multiples of exact values stay exact, so
    relations such as ``rsb + bsb == 2 * qubit`` hold word for word.
    """

    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        self.value = Fraction(value)

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"Exact({float(self.value)!r})"

    def __eq__(self, other):
        return isinstance(other, Exact) and other.value == self.value

    def __hash__(self):
        return hash(self.value)


def _is_num(v) -> bool:
    return isinstance(v, (int, float, Exact)) and not isinstance(v, bool)


def _arith(op: str, a, b):
    if isinstance(a, Exact) or isinstance(b, Exact):
        ea, eb = isinstance(a, Exact) or isinstance(a, int), isinstance(b, Exact) or isinstance(b, int)
        va = a.value if isinstance(a, Exact) else a
        vb = b.value if isinstance(b, Exact) else b
        if op in "+-" and ea and eb:
            return Exact(va + vb if op == "+" else va - vb)
        if op == "*" and ea and eb:
            return Exact(va * vb)
        a, b = float(va), float(vb)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def _freq_exact(x):
    return Exact(dz.discretize_frequency(float(x)) * dz._FREQ_LSB)


def _phase_exact(x):
    w = dz.discretize_phase(float(x))
    if w >= dz.WORD_MOD // 2:
        w -= dz.WORD_MOD
    return Exact(w * dz._PHASE_LSB)


def _amp_exact(x):
    return Exact(dz.discretize_amplitude(float(x)) * dz._AMP_LSB)


BUILTIN_FUNCTIONS = {
    "discretize_frequency": _freq_exact,
    "discretize_phase": _phase_exact,
    "discretize_amplitude": _amp_exact,
    "frequency_word": lambda x: dz.discretize_frequency(float(x)),
    "phase_word": lambda x: dz.discretize_phase(float(x)),
    "amplitude_word": lambda x: dz.discretize_amplitude(float(x)),
    "to_hz": lambda w: Exact(int(w) * dz._FREQ_LSB),
    "to_degrees": lambda w: dz.to_degrees(int(w)),
    "to_amplitude": lambda w: Exact(int(w) * dz._AMP_LSB),
    "sin": lambda x: math.sin(float(x)),
    "cos": lambda x: math.cos(float(x)),
    "sqrt": lambda x: math.sqrt(float(x)),
    "exp": lambda x: math.exp(float(x)),
    "abs": lambda x: Exact(abs(x.value)) if isinstance(x, Exact) else abs(x),
    "min": lambda *xs: min(xs, key=float),
    "max": lambda *xs: max(xs, key=float),
}
BUILTIN_NAMES = {
    "pi": math.pi,
    "GLOBAL_BEAM": Channel(GLOBAL_BEAM),
    "True": True,
    "False": False,
}


# -- definitions --------------------------------------------------------------

@dataclass(frozen=True)
class GateDefinition:
    name: str  # name as written, e.g. "gate_G"
    params: tuple  # ((name, kind), ...)
    body: tuple
    free_names: frozenset = frozenset()
    line: int = field(default=0, compare=False)

    @property
    def exposed_name(self) -> str | None:
        if self.name.startswith(GATE_PREFIX) and len(self.name) > len(GATE_PREFIX):
            return self.name[len(GATE_PREFIX):]
        return None


@dataclass(frozen=True)
class DefinitionSet:
    name: str
    constants: tuple  # ((name, Expr), ...) class-level defaults
    definitions: tuple  # GateDefinition, in file order
    filename: str = "<defs>"

    def gates(self) -> dict:
        """Assembly-visible gates by stripped name."""
        return {d.exposed_name: d for d in self.definitions if d.exposed_name}

    def by_name(self, name: str) -> GateDefinition | None:
        for d in self.definitions:
            if d.name == name:
                return d
        return None

    def calibration_names(self) -> set:
        """Identifiers the gates read from calibration or class defaults."""
        out = set()
        for d in self.definitions:
            out |= d.free_names
        for _, e in self.constants:
            out |= free_names(e, frozenset(BUILTIN_NAMES))
        return out


class _DefParser:
    def __init__(self, text: str, filename: str):
        self.filename = filename
        self.ts = TokenStream(tokenize(text, filename, comments=("//", "#")), filename)

    def parse(self) -> dict:
        ts = self.ts
        sets: dict[str, DefinitionSet] = {}
        ts.skip_newlines()
        while not ts.at("EOF"):
            ts.expect("IDENT", "pulses", "'pulses'")
            name = ts.expect("IDENT", what="definition-set name")
            if name.text in sets:
                ts.fail(f"duplicate definition set {name.text!r}", name)
            sets[name.text] = self.block(name.text)
            ts.skip_newlines()
        return sets

    def block(self, set_name: str) -> DefinitionSet:
        ts = self.ts
        ts.expect("{")
        constants: list = []
        defs: list[GateDefinition] = []
        seen: dict[str, Token] = {}
        while True:
            ts.skip_newlines()
            if ts.accept("}"):
                break
            head = ts.expect("IDENT", what="a constant or gate definition")
            if ts.accept("="):
                constants.append((head.text, self.expr()))
                self.end_statement()
                continue
            if not ts.at("("):
                ts.fail(f"expected '=' or '(' after {head.text!r}, found {describe(ts.peek)}")
            gate = self.gate(head)
            key = gate.exposed_name or gate.name
            if key in seen:
                ts.fail(f"duplicate gate name {key!r} (also defined at line {seen[key].line})", head)
            seen[key] = head
            defs.append(gate)
        return DefinitionSet(set_name, tuple(constants), tuple(defs), self.filename)

    def gate(self, head: Token) -> GateDefinition:
        ts = self.ts
        ts.expect("(")
        params = []
        if not ts.at(")"):
            while True:
                p = ts.expect("IDENT", what="parameter name")
                kind = "qubit"
                if ts.accept(":"):
                    k = ts.expect("IDENT", what="parameter kind")
                    if k.text not in PARAM_KINDS:
                        ts.fail(f"unknown parameter kind {k.text!r}; use qubit or number", k)
                    kind = k.text
                if any(p.text == q for q, _ in params):
                    ts.fail(f"duplicate parameter {p.text!r}", p)
                params.append((p.text, kind))
                if not ts.accept(","):
                    break
        ts.expect(")")
        ts.expect("{")
        body = []
        bound = {p for p, _ in params} | set(BUILTIN_NAMES)
        free: set = set()
        while True:
            ts.skip_newlines()
            if ts.accept("}"):
                break
            tok = ts.expect("IDENT", what="a statement")
            if ts.accept("="):
                value = self.expr()
                free |= free_names(value, frozenset(bound))
                bound.add(tok.text)
                body.append(Assign(tok.text, value, tok.line))
            elif ts.at("("):
                args, kwargs = self.call_args()
                for a in list(args) + [v for _, v in kwargs]:
                    free |= free_names(a, frozenset(bound))
                if tok.text == "PulseData":
                    body.append(Emit(args, kwargs, tok.line, tok.col))
                else:
                    if kwargs:
                        ts.fail("keyword arguments are only allowed in PulseData", tok)
                    body.append(Invoke(tok.text, args, tok.line, tok.col))
            else:
                ts.fail(f"expected '=' or '(' after {tok.text!r}, found {describe(ts.peek)}")
            self.end_statement()
        return GateDefinition(head.text, tuple(params), tuple(body), frozenset(free), head.line)

    def end_statement(self):
        ts = self.ts
        if ts.at("NEWLINE") or ts.at(";"):
            ts.next()
        elif not ts.at("}"):
            ts.fail(f"expected end of statement, found {describe(ts.peek)}")

    def call_args(self):
        ts = self.ts
        ts.expect("(")
        args, kwargs = [], []
        while not ts.at(")"):
            self.skip_nl()
            if ts.at("IDENT") and ts.peek_at(1).kind == "=":
                key = ts.next()
                ts.next()
                if any(k == key.text for k, _ in kwargs):
                    ts.fail(f"repeated keyword argument {key.text!r}", key)
                kwargs.append((key.text, self.expr()))
            else:
                if kwargs:
                    ts.fail("positional argument after keyword argument")
                args.append(self.expr())
            self.skip_nl()
            if not ts.accept(","):
                break
            self.skip_nl()
        ts.expect(")")
        return tuple(args), tuple(kwargs)

    def skip_nl(self):
        while self.ts.at("NEWLINE"):
            self.ts.next()

    def expr(self) -> Expr:
        left = self.term()
        while self.ts.peek.kind in ("+", "-"):
            op = self.ts.next()
            left = BinOp(op.kind, left, self.term(), line=op.line, col=op.col)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.ts.peek.kind in ("*", "/"):
            op = self.ts.next()
            left = BinOp(op.kind, left, self.unary(), line=op.line, col=op.col)
        return left

    def unary(self) -> Expr:
        ts = self.ts
        if ts.at("-"):
            tok = ts.next()
            return Neg(self.unary(), line=tok.line, col=tok.col)
        if ts.accept("+"):
            return self.unary()
        return self.primary()

    def primary(self) -> Expr:
        ts = self.ts
        tok = ts.peek
        if tok.kind == "NUMBER":
            ts.next()
            return Num(number_value(tok.text), line=tok.line, col=tok.col)
        if tok.kind == "IDENT":
            ts.next()
            if ts.at("("):
                args, kwargs = self.call_args()
                if kwargs:
                    ts.fail("keyword arguments are only allowed in PulseData", tok)
                return Call(tok.text, args, line=tok.line, col=tok.col)
            return Name(tok.text, line=tok.line, col=tok.col)
        if tok.kind == "[":
            ts.next()
            items = self.items("]")
            return ListLit(tuple(items), line=tok.line, col=tok.col)
        if tok.kind == "(":
            ts.next()
            self.skip_nl()
            first = self.expr()
            self.skip_nl()
            if ts.accept(")"):
                return first
            ts.expect(",", what="',' or ')'")
            rest = self.items(")")
            return TupleLit((first, *rest), line=tok.line, col=tok.col)
        ts.fail(f"expected an expression, found {describe(tok)}")

    def items(self, close: str) -> list:
        ts = self.ts
        out = []
        self.skip_nl()
        while not ts.at(close):
            out.append(self.expr())
            self.skip_nl()
            if not ts.accept(","):
                break
            self.skip_nl()
        ts.expect(close)
        return out


def load_definitions(source: str, filename: str = "<defs>") -> dict:
    """Parse a definition file into ``{set name: DefinitionSet}``.

    Raises :class:`SourceError` with line/column on malformed input,
    including two definitions that collide after ``gate_`` stripping.
    """
    return _DefParser(source, filename).parse()


def load_calibration(source: str, filename: str = "<calibration>") -> dict:
    """Parse ``key = value`` lines; ``#`` and ``//`` start comments."""
    ts = TokenStream(tokenize(source, filename, comments=("//", "#")), filename)
    out: dict[str, float] = {}
    parser = _DefParser("", filename)
    parser.ts = ts
    ts.skip_newlines()
    while not ts.at("EOF"):
        key = ts.expect("IDENT", what="calibration key")
        ts.expect("=")
        expr = parser.expr()
        if free_names(expr, frozenset(BUILTIN_NAMES)) or not _is_num(v := _eval(expr, dict(BUILTIN_NAMES), None)):
            ts.fail(f"calibration value for {key.text!r} must be a number", key)
        if key.text in out:
            ts.fail(f"duplicate calibration key {key.text!r}", key)
        out[key.text] = v
        if not (ts.accept("NEWLINE") or ts.accept(";") or ts.at("EOF")):
            ts.fail(f"expected end of line, found {describe(ts.peek)}")
        ts.skip_newlines()
    return out


# -- evaluation ---------------------------------------------------------------

class _Scope:
    def __init__(self, dset: DefinitionSet, calib: dict):
        self.dset = dset
        self.calib = dict(calib)
        self.constants = dict(dset.constants)
        self.cache: dict[str, object] = {}
        self.resolving: set = set()

    def lookup(self, name: str, node: Expr):
        if name in self.cache:
            return self.cache[name]
        if name in self.calib:
            value = self.calib[name]
        elif name in self.constants:
            if name in self.resolving:
                raise self.error(f"constant {name!r} refers to itself", node)
            self.resolving.add(name)
            try:
                value = _eval(self.constants[name], dict(BUILTIN_NAMES), self)
            finally:
                self.resolving.discard(name)
        elif name in BUILTIN_NAMES:
            value = BUILTIN_NAMES[name]
        else:
            raise self.error(f"unbound identifier {name!r} (not a parameter, local, constant or calibration key)", node)
        self.cache[name] = value
        return value

    def error(self, message: str, node) -> DefinitionError:
        return DefinitionError(message, getattr(node, "line", 0), getattr(node, "col", 0), self.dset.filename)


def _eval(node: Expr, env: dict, scope: _Scope | None):
    def fail(msg):
        if scope is not None:
            raise scope.error(msg, node)
        raise DefinitionError(msg, node.line, node.col)

    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name in env:
            return env[node.name]
        if scope is None:
            fail(f"unbound identifier {node.name!r}")
        return scope.lookup(node.name, node)
    if isinstance(node, Neg):
        v = _eval(node.operand, env, scope)
        if isinstance(v, Exact):
            return Exact(-v.value)
        if not _is_num(v):
            fail("cannot negate a non-number")
        return -v
    if isinstance(node, BinOp):
        a = _eval(node.left, env, scope)
        b = _eval(node.right, env, scope)
        if not (_is_num(a) and _is_num(b)):
            fail(f"operator {node.op!r} needs numbers")
        try:
            return _arith(node.op, a, b)
        except ZeroDivisionError:
            fail("division by zero")
    if isinstance(node, Call):
        fn = BUILTIN_FUNCTIONS.get(node.func)
        if fn is None:
            fail(f"unknown function {node.func!r}")
        args = [_eval(a, env, scope) for a in node.args]
        if not all(_is_num(a) for a in args):
            fail(f"{node.func}() needs numeric arguments")
        try:
            return fn(*args)
        except (ValueError, TypeError, OverflowError) as exc:
            fail(f"{node.func}(): {exc}")
    if isinstance(node, ListLit):
        return [_eval(a, env, scope) for a in node.items]
    if isinstance(node, TupleLit):
        return tuple(_eval(a, env, scope) for a in node.items)
    raise TypeError(node)


def _to_param(value, key: str, fail):
    if isinstance(value, (list, tuple)):
        if not all(_is_num(v) for v in value):
            fail(f"{key} must hold numbers only")
        conv = [float(v) for v in value]
        if isinstance(value, tuple) and len(conv) < 2:
            fail(f"{key} spline needs at least two knots")
        if isinstance(value, list) and not conv:
            fail(f"{key} list is empty")
        return conv if isinstance(value, list) else tuple(conv)
    if not _is_num(value):
        fail(f"{key} must be a number, list or tuple")
    return float(value)


def _channel_of(value, fail) -> int:
    if isinstance(value, Qubit):
        return value.channel
    if isinstance(value, Channel):
        return value.index
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    fail("PulseData channel must be a qubit, GLOBAL_BEAM or an integer")


def _emit(stmt: Emit, env: dict, scope: _Scope) -> PulseRecord:
    def fail(msg):
        raise scope.error(msg, stmt)

    if len(stmt.args) != 2:
        fail(f"PulseData takes a channel and a duration, got {len(stmt.args)} positional arguments")
    channel = _channel_of(_eval(stmt.args[0], env, scope), fail)
    duration = _eval(stmt.args[1], env, scope)
    if not _is_num(duration):
        fail("PulseData duration must be a number")
    kwargs = {}
    for key, expr in stmt.kwargs:
        if key not in PULSE_KEYWORDS:
            fail(f"unknown PulseData argument {key!r}")
        value = _eval(expr, env, scope)
        if key in MASKS:
            if not isinstance(value, int) or isinstance(value, bool):
                fail(f"{key} must be an integer mask")
            kwargs[key] = value
        elif key == "waittrig":
            if not isinstance(value, bool):
                fail("waittrig must be True or False")
            kwargs[key] = value
        else:
            kwargs[key] = _to_param(value, key, fail)
    return PulseRecord(channel, float(duration), **kwargs)


def _bind_args(defn: GateDefinition, args, fail) -> dict:
    if len(args) != len(defn.params):
        fail(f"{defn.exposed_name or defn.name} expects {len(defn.params)} argument(s), got {len(args)}")
    env = {}
    for (pname, kind), value in zip(defn.params, args):
        if kind == "qubit" and not isinstance(value, (Qubit, Channel)):
            fail(f"argument {pname!r} must be a qubit")
        if kind == "number" and not _is_num(value):
            fail(f"argument {pname!r} must be a number")
        env[pname] = value
    return env


def _run(defn: GateDefinition, args, scope: _Scope, depth: int) -> list:
    if depth > 32:
        raise scope.error(f"definition {defn.name!r} expands too deeply (recursive?)", defn)

    def fail(msg):
        raise scope.error(msg, defn)

    env = dict(BUILTIN_NAMES)
    env.update(_bind_args(defn, args, fail))
    pulses = []
    for stmt in defn.body:
        if isinstance(stmt, Assign):
            env[stmt.name] = _eval(stmt.value, env, scope)
        elif isinstance(stmt, Emit):
            pulses.append(_emit(stmt, env, scope))
        else:
            target = scope.dset.by_name(stmt.name)
            if target is None:
                raise scope.error(f"unknown definition {stmt.name!r}", stmt)
            sub_args = [_eval(a, env, scope) for a in stmt.args]
            pulses.extend(_run(target, sub_args, scope, depth + 1))
    return pulses


def instantiate(defn: GateDefinition, args, calib: dict, dset: DefinitionSet | None = None) -> GateBlock:
    """Evaluate a gate body for concrete arguments and calibration values.

    Qubit arguments are :class:`Qubit` values (``q[i]`` drives channel
    ``i + 1``); numbers pass through unchanged.
    """
    dset = dset or DefinitionSet("<anonymous>", (), (defn,))
    scope = _Scope(dset, calib)
    return GateBlock(tuple(_run(defn, list(args), scope, 0)), defn.exposed_name or defn.name)
