"""Expression language for user-defined systems.

Grammar (full EBNF in ``docs/system_file.md``)::

    expr  = term { ("+" | "-") term }
    term  = unary { ("*" | "/") unary }
    unary = ("-" | "+") unary | power
    power = atom [ "^" unary ]
    atom  = number | name | name "(" expr ")" | "(" expr ")"

so unary minus binds tighter than ``*`` but looser than ``^``:
``-2^2 = -4`` and ``2^-1 = 0.5``. ``^`` is right associative.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemDef

FUNCTIONS = {
    "exp": np.exp,
    "ln": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": math.pi}
LAMBDA = "lambda"
RESERVED = set(FUNCTIONS) | set(CONSTANTS) | {LAMBDA, "inf"}

_ATOM_START = frozenset({"number", "name", "'('", "'-'", "'+'"})


class ExprError(ValueError):
    """Problem in an expression or a system file, with a 1-based position."""

    def __init__(self, msg, line=1, col=1, expected=()):
        self.line, self.col, self.expected = line, col, frozenset(expected)
        where = f"line {line}, column {col}"
        extra = f"; expected one of {', '.join(sorted(self.expected))}" if self.expected else ""
        super().__init__(f"{where}: {msg}{extra}")


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class DimensionMismatchError(ExprError):
    pass


# ---------------------------------------------------------------------------
# AST


class ExprAst:
    """Base class of expression nodes."""

    prec = 5

    def evaluate(self, env):
        raise NotImplementedError

    def names(self):
        return set()

    def variables(self):
        return []

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Num(ExprAst):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Var(ExprAst):
    name: str
    col: int = field(default=0, compare=False)

    def evaluate(self, env):
        return env[self.name] if self.name in env else CONSTANTS[self.name]

    def names(self):
        return {self.name}

    def variables(self):
        return [self]

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Neg(ExprAst):
    operand: ExprAst
    prec = 3

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def names(self):
        return self.operand.names()

    def variables(self):
        return self.operand.variables()

    def __str__(self):
        return format_expr(self)


_BINARY_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


@dataclass(frozen=True, eq=True)
class BinOp(ExprAst):
    op: str
    left: ExprAst
    right: ExprAst

    @property
    def prec(self):
        return _BINARY_PREC[self.op]

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return _power(a, b, self.right)

    def names(self):
        return self.left.names() | self.right.names()

    def variables(self):
        return self.left.variables() + self.right.variables()

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Call(ExprAst):
    func: str
    arg: ExprAst

    def evaluate(self, env):
        return FUNCTIONS[self.func](self.arg.evaluate(env))

    def names(self):
        return self.arg.names()

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return format_expr(self)


def _power(base, exponent, exponent_node):
    if not exponent_node.names() - set(CONSTANTS) or np.ndim(exponent) == 0:
        return np.power(base, exponent)
    # variable exponent: defined through exp/ln, positive bases only
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.exp(exponent * np.log(base))


def format_expr(node):
    """Text form of ``node`` with only the parentheses needed to re-parse the same tree."""
    if isinstance(node, Num):
        v = float(node.value)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({format_expr(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 3)
    if isinstance(node, BinOp):
        if node.op == "^":
            return f"{_wrap(node.left, 5)}^{_wrap(node.right, 3)}"
        p = node.prec
        return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"
    raise TypeError(f"not an expression node: {node!r}")


def _wrap(node, min_prec):
    text = format_expr(node)
    return text if node.prec >= min_prec else f"({text})"


# ---------------------------------------------------------------------------
# tokenizer and parser


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(text, line=1, col0=1):
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind if kind != "op" else f"'{m.group()}'", m.group(), col0 + pos))
        pos = m.end()
    toks.append(_Tok("end", "", col0 + len(text)))
    return toks


class _Parser:
    def __init__(self, text, line, col0):
        self.toks = _tokenize(text, line, col0)
        self.i, self.line = 0, line
        self.open_parens = []

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, expected, msg=None):
        t = self.tok
        if msg is None:
            msg = "unexpected end of input" if t.kind == "end" else f"unexpected {t.text!r}"
            if t.kind == "end" and self.open_parens:
                msg += f" (unclosed '(' at column {self.open_parens[-1]})"
        raise ExprSyntaxError(msg, self.line, t.col, expected)

    def take(self, kind):
        if self.tok.kind != kind:
            self.fail({kind})
        self.i += 1
        return self.toks[self.i - 1]

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail({"operator", "end of expression"})
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind in ("'+'", "'-'"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind in ("'*'", "'/'"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "'-'":
            self.i += 1
            return Neg(self.unary())
        if self.tok.kind == "'+'":
            self.i += 1
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "'^'":
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "name":
            self.i += 1
            if self.tok.kind == "'('":
                if t.text not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {t.text!r}", self.line, t.col,
                                                 set(FUNCTIONS))
                arg = self.group()
                if self.tok.kind == "','":
                    raise ExprSyntaxError(f"{t.text} takes exactly one argument", self.line,
                                          self.tok.col, {"')'"})
                return Call(t.text, arg)
            if t.text in FUNCTIONS:
                self.fail({"'('"}, f"function {t.text!r} needs an argument")
            return Var(t.text, t.col)
        if t.kind == "'('":
            return self.group()
        self.fail(_ATOM_START)

    def group(self):
        self.open_parens.append(self.tok.col)
        self.take("'('")
        node = self.expr()
        if self.tok.kind == "','":
            return node
        self.take("')'")
        self.open_parens.pop()
        return node


def parse_expr(text, *, line=1, col=1):
    """Parse one expression into an :class:`ExprAst`."""
    return _Parser(text, line, col).parse()


def check_names(node, allowed, line=1, col=1):
    known = set(allowed) | set(CONSTANTS)
    for var in node.variables():
        if var.name not in known:
            raise UnknownIdentifierError(f"unknown identifier {var.name!r}", line,
                                         var.col or col, known)


# ---------------------------------------------------------------------------
# system files


SECTIONS = ("states", "params", "flow", "kickrate", "domain", "meta")
_SECTION = re.compile(r"^\s*\[(\w+)\]\s*$")
_ASSIGN = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)(')?\s*=\s*(.*?)\s*$")


@dataclass
class _Line:
    number: int
    text: str
    col: int


@dataclass
class SystemSpecFile:
    """Parsed contents of a system file."""

    states: tuple
    params: dict
    flow: tuple
    kickrate: tuple
    domain: tuple = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.states)

    def _env(self, x, lam=None):
        env = dict(CONSTANTS)
        env.update(self.params)
        for i, name in enumerate(self.states):
            env[name] = x[i]
        if lam is not None:
            env[LAMBDA] = lam
        return env

    def to_system(self):
        flow_exprs, kick_exprs = self.flow, self.kickrate

        def f(x):
            env = self._env(x)
            return np.stack([np.broadcast_to(e.evaluate(env), np.shape(x[0])).astype(float)
                             for e in flow_exprs])

        def r(u, lam):
            env = self._env(u, lam)
            shape = np.broadcast_shapes(np.shape(u[0]), np.shape(lam))
            return np.stack([np.broadcast_to(e.evaluate(env), shape).astype(float)
                             for e in kick_exprs])

        return SystemDef(n=self.n, f=f, r=r, domain_hint=self.domain,
                         name=self.meta.get("name", "custom"), state_names=tuple(self.states))

    def to_text(self):
        out = ["[states]", ", ".join(self.states)]
        if self.params:
            out += ["", "[params]"] + [f"{k} = {v!r}" for k, v in self.params.items()]
        out += ["", "[flow]"] + [f"{s}' = {format_expr(e)}" for s, e in zip(self.states, self.flow)]
        out += ["", "[kickrate]"] + [f"r_{s} = {format_expr(e)}"
                                     for s, e in zip(self.states, self.kickrate)]
        if self.domain is not None:
            lo, hi = self.domain
            out += ["", "[domain]"] + [f"{s} = {_num_text(a)} : {_num_text(b)}"
                                       for s, a, b in zip(self.states, lo, hi)]
        if self.meta:
            out += ["", "[meta]"] + [f"{k} = {v}" for k, v in self.meta.items()]
        return "\n".join(out) + "\n"


def _num_text(v):
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _split_sections(text):
    sections, current = {}, None
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        m = _SECTION.match(body)
        if m:
            current = m.group(1).lower()
            if current not in SECTIONS:
                raise ExprSyntaxError(f"unknown section [{current}]", number,
                                      body.index("[") + 1, {f"[{s}]" for s in SECTIONS})
            if current in sections:
                raise ExprSyntaxError(f"duplicate section [{current}]", number, 1)
            sections[current] = []
            continue
        if current is None:
            raise ExprSyntaxError("content before the first section header", number, 1,
                                  {f"[{s}]" for s in SECTIONS})
        sections[current].append(_Line(number, body.rstrip(), 1))
    return sections


def _assignment(line, want_prime=None):
    m = _ASSIGN.match(line.text)
    if m is None:
        raise ExprSyntaxError("expected an assignment 'name = value'", line.number, 1,
                              {"name", "'='"})
    name, prime, rhs = m.group(1), m.group(2), m.group(3)
    if want_prime is not None and bool(prime) != want_prime:
        what = f"{name}'" if want_prime else name
        raise ExprSyntaxError(f"malformed left-hand side, expected {what!r}", line.number,
                              m.start(1) + 1)
    if not rhs:
        raise ExprSyntaxError("missing right-hand side", line.number, len(line.text) + 1,
                              _ATOM_START)
    return name, rhs, m.start(3) + 1


def _bound(text, line, col):
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return np.inf
    if t == "-inf":
        return -np.inf
    try:
        return float(t)
    except ValueError:
        raise ExprSyntaxError(f"bad domain bound {text.strip()!r}", line, col,
                              {"number", "inf", "-inf"}) from None


def parse_spec(text):
    """Parse a system file into a :class:`SystemSpecFile` (expressions kept as ASTs)."""
    sections = _split_sections(text)
    for need in ("states", "flow", "kickrate"):
        if need not in sections:
            raise ExprSyntaxError(f"missing section [{need}]", 1, 1, {f"[{need}]"})

    states = []
    for line in sections["states"]:
        for part in line.text.split(","):
            name = part.strip()
            if not name:
                continue
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
                raise ExprSyntaxError(f"invalid state name {name!r}", line.number,
                                      line.text.index(name) + 1, {"name"})
            if name in RESERVED or name in states:
                raise ExprSyntaxError(f"state name {name!r} is reserved or repeated",
                                      line.number, line.text.index(name) + 1)
            states.append(name)
    if not states:
        raise DimensionMismatchError("no states declared", sections["states"][0].number
                                     if sections["states"] else 1, 1)

    params = {}
    for line in sections.get("params", []):
        name, rhs, col = _assignment(line, want_prime=False)
        if name in RESERVED or name in states or name in params:
            raise ExprSyntaxError(f"parameter name {name!r} clashes with another name",
                                  line.number, 1)
        node = parse_expr(rhs, line=line.number, col=col)
        check_names(node, params, line.number, col)
        params[name] = float(node.evaluate({**CONSTANTS, **params}))

    allowed_f = set(states) | set(params)
    flow = {}
    for line in sections["flow"]:
        name, rhs, col = _assignment(line, want_prime=True)
        if name not in states:
            raise UnknownIdentifierError(f"{name!r} is not a declared state", line.number, 1,
                                         set(states))
        if name in flow:
            raise DimensionMismatchError(f"second equation for {name}'", line.number, 1)
        node = parse_expr(rhs, line=line.number, col=col)
        for var in node.variables():
            if var.name == LAMBDA:
                raise UnknownIdentifierError("the undisturbed flow must not depend on lambda",
                                             line.number, var.col, allowed_f)
        check_names(node, allowed_f, line.number, col)
        flow[name] = node

    allowed_r = allowed_f | {LAMBDA}
    kick = {}
    for line in sections["kickrate"]:
        name, rhs, col = _assignment(line, want_prime=False)
        if not name.startswith("r_") or name[2:] not in states:
            raise UnknownIdentifierError(f"{name!r} does not name a kick-rate component",
                                         line.number, 1, {f"r_{s}" for s in states})
        if name[2:] in kick:
            raise DimensionMismatchError(f"second equation for {name}", line.number, 1)
        node = parse_expr(rhs, line=line.number, col=col)
        check_names(node, allowed_r, line.number, col)
        kick[name[2:]] = node

    for label, got in (("[flow]", flow), ("[kickrate]", kick)):
        missing = [s for s in states if s not in got]
        if missing:
            raise DimensionMismatchError(
                f"{label} has {len(got)} equations for {len(states)} states "
                f"(missing {', '.join(missing)})", 1, 1)

    domain = None
    if "domain" in sections:
        lo, hi = np.full(len(states), -np.inf), np.full(len(states), np.inf)
        for line in sections["domain"]:
            name, rhs, col = _assignment(line, want_prime=False)
            if name not in states:
                raise UnknownIdentifierError(f"{name!r} is not a declared state", line.number, 1,
                                             set(states))
            if ":" not in rhs:
                raise ExprSyntaxError("expected 'lo : hi'", line.number, col, {"':'"})
            a, b = rhs.split(":", 1)
            k = states.index(name)
            lo[k] = _bound(a, line.number, col)
            hi[k] = _bound(b, line.number, col + len(a) + 1)
            if not lo[k] <= hi[k]:
                raise ExprSyntaxError(f"empty domain interval for {name}", line.number, col)
        domain = (lo, hi)

    meta = {}
    for line in sections.get("meta", []):
        key, value = line.text.split("=", 1) if "=" in line.text else (line.text, "")
        meta[key.strip()] = value.strip()

    return SystemSpecFile(tuple(states), params, tuple(flow[s] for s in states),
                          tuple(kick[s] for s in states), domain, meta)


def parse_system(text):
    """Build a :class:`SystemDef` from system-file text.

    Raises :class:`ExprSyntaxError`, :class:`UnknownIdentifierError` or
    :class:`DimensionMismatchError`, each carrying ``line``, ``col`` and the
    ``expected`` token set.
    """
    return parse_spec(text).to_system()


def load_system(path):
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


__all__ = [
    "BinOp", "Call", "DimensionMismatchError", "ExprAst", "ExprError", "ExprSyntaxError",
    "Neg", "Num", "SystemSpecFile", "UnknownIdentifierError", "Var", "format_expr",
    "load_system", "parse_expr", "parse_spec", "parse_system",
]
