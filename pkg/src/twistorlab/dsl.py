"""Metric description language.

A metric file binds the components of a 4x4 symmetric metric tensor to
expressions in the chart coordinates ``x1..x4``::

    # unit 4-sphere, stereographic chart
    param r = 1
    g11 = r^2*(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))^2
    g22 = ...

Bindings are whitespace separated.  Besides ``gIJ = expr`` and
``param name = number`` a file may restrict the sampling box with
``domain xK = lo, hi``.  Powers take nonnegative integer exponents only;
general powers are spelled with ``exp``/``log``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .jets import UNARY_FUNCTIONS, Jet2, JetDomainError

COORD_NAMES = ("x1", "x2", "x3", "x4")
DEFAULT_DOMAIN = ((-1.0, 1.0),) * 4
ORIENTATIONS = ("standard", "reversed")
MIN_EIGENVALUE = 1e-8


class DSLError(ValueError):
    """Base class for metric-file errors."""


class ParseError(DSLError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class UnknownIdentifierError(ParseError):
    pass


class MetricDomainError(ArithmeticError):
    """Expression evaluated outside its domain; ``node`` is the culprit."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in {format_expr(node)}")
        self.node = node


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Expr:
    __slots__ = ()

    def value(self, x: Sequence[float], params: Mapping[str, float]) -> float:
        raise NotImplementedError

    def jet(self, xs: Sequence[Jet2], params: Mapping[str, float]) -> Jet2:
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Expr):
    v: float

    def value(self, x, params):
        return self.v

    def jet(self, xs, params):
        return Jet2.constant(self.v)


@dataclass(frozen=True)
class Coord(Expr):
    index: int  # 1..4

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise ValueError(f"coordinate index {self.index} outside 1..4")

    def value(self, x, params):
        return float(x[self.index - 1])

    def jet(self, xs, params):
        return xs[self.index - 1]


@dataclass(frozen=True)
class Param(Expr):
    name: str

    def value(self, x, params):
        return float(params[self.name])

    def jet(self, xs, params):
        return Jet2.constant(params[self.name])


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def value(self, x, params):
        return -self.operand.value(x, params)

    def jet(self, xs, params):
        return -self.operand.jet(xs, params)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def value(self, x, params):
        a = self.left.value(x, params)
        b = self.right.value(x, params)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0.0:
            raise MetricDomainError("division by zero", self)
        return a / b

    def jet(self, xs, params):
        a = self.left.jet(xs, params)
        b = self.right.jet(xs, params)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        try:
            return a / b
        except JetDomainError as exc:
            raise MetricDomainError(str(exc), self) from None


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("negative exponent")

    def value(self, x, params):
        return self.base.value(x, params) ** self.exponent

    def jet(self, xs, params):
        return self.base.jet(xs, params) ** self.exponent


_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sinh": math.sinh,
    "cosh": math.cosh,
}


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def value(self, x, params):
        a = self.arg.value(x, params)
        if self.name == "log" and a <= 0.0:
            raise MetricDomainError(f"log of nonpositive value {a!r}", self)
        if self.name == "sqrt" and a < 0.0:
            raise MetricDomainError(f"sqrt of negative value {a!r}", self)
        try:
            return _FLOAT_FUNCS[self.name](a)
        except (ValueError, OverflowError) as exc:
            raise MetricDomainError(str(exc), self) from None

    def jet(self, xs, params):
        a = self.arg.jet(xs, params)
        try:
            return getattr(a, self.name)()
        except (JetDomainError, OverflowError) as exc:
            raise MetricDomainError(str(exc), self) from None


# ---------------------------------------------------------------------------
# pretty printing
# ---------------------------------------------------------------------------


def _fmt_number(v: float) -> str:
    text = repr(float(v))
    return f"({text})" if v < 0 or text.startswith("-") else text


def format_expr(e: Expr) -> str:
    """Render an expression so that re-parsing reproduces the same tree."""
    if isinstance(e, Num):
        return _fmt_number(e.v)
    if isinstance(e, Coord):
        return f"x{e.index}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Neg):
        return f"(-{format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Pow):
        return f"{_atomic(e.base)}^{e.exponent}"
    if isinstance(e, Func):
        return f"{e.name}({format_expr(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def _atomic(e: Expr) -> str:
    text = format_expr(e)
    # a power's text can start with "(" yet still needs its own parentheses
    if isinstance(e, (Coord, Param, Func, BinOp, Neg)) or (text.startswith("(") and not isinstance(e, Pow)):
        return text
    return f"({text})"


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()=,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind in ("number", "ident", "op"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_COMPONENT_RE = re.compile(r"g([1-4])([1-4])$")
_RESERVED = set(COORD_NAMES) | set(UNARY_FUNCTIONS) | {"param", "domain"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.param_refs: list[Token] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind not in ("op",):
            raise ParseError(f"expected {text!r}, found {_describe(t)}", t.line, t.col)
        return self.advance()

    def signed_number(self) -> float:
        sign = 1.0
        while self.tok.kind == "op" and self.tok.text in "+-":
            if self.advance().text == "-":
                sign = -sign
        t = self.tok
        if t.kind != "number":
            raise ParseError(f"expected a number, found {_describe(t)}", t.line, t.col)
        self.advance()
        return sign * float(t.text)

    # expr := term (("+"|"-") term)*
    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    # term := unary (("*"|"/") unary)*
    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.factor()

    # factor := atom ("^" uint)?
    def factor(self) -> Expr:
        node = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            t = self.tok
            if t.kind != "number" or not t.text.isdigit():
                raise ParseError(
                    f"exponent must be a nonnegative integer, found {_describe(t)}", t.line, t.col
                )
            self.advance()
            node = Pow(node, int(t.text))
        return node

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text))
        if t.kind == "op" and t.text == "(":
            self.advance()
            inner = self.expr()
            self._close(t)
            return inner
        if t.kind == "ident":
            if t.text in COORD_NAMES:
                self.advance()
                return Coord(int(t.text[1]))
            if t.text in UNARY_FUNCTIONS:
                self.advance()
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise ParseError(
                        f"function {t.text!r} must be followed by '('", self.tok.line, self.tok.col
                    )
                opener = self.advance()
                arg = self.expr()
                self._close(opener)
                return Func(t.text, arg)
            if _COMPONENT_RE.match(t.text) or t.text in ("param", "domain"):
                raise ParseError(f"unexpected {_describe(t)} inside expression", t.line, t.col)
            self.advance()
            self.param_refs.append(t)
            return Param(t.text)
        raise ParseError(f"unexpected {_describe(t)}", t.line, t.col)

    def _close(self, opener: Token) -> None:
        t = self.tok
        if t.kind == "op" and t.text == ")":
            self.advance()
            return
        if t.kind == "eof":
            raise ParseError("unclosed parenthesis", opener.line, opener.col)
        raise ParseError(
            f"expected ')' to close parenthesis at line {opener.line}, column {opener.col}, "
            f"found {_describe(t)}",
            t.line,
            t.col,
        )


def _describe(t: Token) -> str:
    return "end of input" if t.kind == "eof" else repr(t.text)


# ---------------------------------------------------------------------------
# metric specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSpec:
    """A symmetric 4x4 field of expressions, closed over parameter values."""

    components: tuple[tuple[Expr, ...], ...]
    params: Mapping[str, float] = field(default_factory=dict)
    domain: tuple[tuple[float, float], ...] = DEFAULT_DOMAIN
    orientation: str = "standard"

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        for i in range(4):
            for j in range(4):
                if self.components[i][j] != self.components[j][i]:
                    raise DSLError(f"components g{i+1}{j+1} and g{j+1}{i+1} differ")

    def bind(self, **params: float) -> "MetricSpec":
        """Return a copy with some parameters re-bound."""
        unknown = set(params) - set(self.params)
        if unknown:
            raise DSLError(f"unknown parameters: {sorted(unknown)}")
        return replace(self, params={**self.params, **params})

    def with_orientation(self, orientation: str) -> "MetricSpec":
        return replace(self, orientation=orientation)

    def with_domain(self, domain: Sequence[tuple[float, float]]) -> "MetricSpec":
        return replace(self, domain=tuple((float(a), float(b)) for a, b in domain))

    def contains(self, x: Sequence[float]) -> bool:
        return all(lo < xi < hi for xi, (lo, hi) in zip(x, self.domain))

    def metric_value(self, x: Sequence[float]) -> np.ndarray:
        g = np.empty((4, 4))
        for i in range(4):
            for j in range(i, 4):
                g[i, j] = g[j, i] = self.components[i][j].value(x, self.params)
        return g

    def to_text(self) -> str:
        return format_metric(self)


def parse_metric(text: str, **overrides: float) -> MetricSpec:
    """Parse metric DSL text into a :class:`MetricSpec`.

    Keyword arguments override ``param`` defaults declared in the file.
    """
    p = _Parser(text)
    entries: dict[tuple[int, int], tuple[Expr, Token]] = {}
    params: dict[str, float] = {}
    domain = list(DEFAULT_DOMAIN)
    while p.tok.kind != "eof":
        head = p.tok
        if head.kind != "ident":
            raise ParseError(f"expected a binding, found {_describe(head)}", head.line, head.col)
        if head.text == "param":
            p.advance()
            name_tok = p.tok
            if name_tok.kind != "ident" or name_tok.text in _RESERVED or _COMPONENT_RE.match(
                name_tok.text
            ):
                raise ParseError(
                    f"invalid parameter name {_describe(name_tok)}", name_tok.line, name_tok.col
                )
            p.advance()
            p.expect("=")
            if name_tok.text in params:
                raise ParseError(
                    f"parameter {name_tok.text!r} declared twice", name_tok.line, name_tok.col
                )
            params[name_tok.text] = p.signed_number()
        elif head.text == "domain":
            p.advance()
            c = p.tok
            if c.text not in COORD_NAMES:
                raise ParseError(f"expected a coordinate, found {_describe(c)}", c.line, c.col)
            p.advance()
            p.expect("=")
            lo = p.signed_number()
            p.expect(",")
            hi = p.signed_number()
            if not lo < hi:
                raise ParseError("empty domain interval", c.line, c.col)
            domain[int(c.text[1]) - 1] = (lo, hi)
        else:
            m = _COMPONENT_RE.match(head.text)
            if m is None:
                raise ParseError(f"expected a binding, found {_describe(head)}", head.line, head.col)
            p.advance()
            p.expect("=")
            key = (int(m.group(1)) - 1, int(m.group(2)) - 1)
            if key in entries:
                raise ParseError(f"{head.text} given twice", head.line, head.col)
            entries[key] = (p.expr(), head)

    for ref in p.param_refs:
        if ref.text not in params:
            raise UnknownIdentifierError(f"unknown identifier {ref.text!r}", ref.line, ref.col)
    unknown = set(overrides) - set(params)
    if unknown:
        raise DSLError(f"unknown parameters: {sorted(unknown)}")
    params.update({k: float(v) for k, v in overrides.items()})

    comps: list[list[Expr]] = [[Num(0.0)] * 4 for _ in range(4)]
    for i in range(4):
        if (i, i) not in entries:
            raise DSLError(f"missing diagonal entry g{i+1}{i+1}")
        comps[i][i] = entries[(i, i)][0]
    for (i, j), (e, tok) in entries.items():
        if i == j:
            continue
        other = entries.get((j, i))
        if other is not None and other[0] != e:
            raise ParseError(
                f"g{i+1}{j+1} and g{j+1}{i+1} are both given with different expressions",
                tok.line,
                tok.col,
            )
        comps[i][j] = comps[j][i] = e
    return MetricSpec(tuple(tuple(row) for row in comps), params, tuple(domain))


def format_metric(spec: MetricSpec) -> str:
    lines = [f"param {k} = {v!r}" for k, v in spec.params.items()]
    for k, (lo, hi) in enumerate(spec.domain):
        if (lo, hi) != DEFAULT_DOMAIN[k]:
            lines.append(f"domain x{k+1} = {lo!r}, {hi!r}")
    for i in range(4):
        for j in range(i, 4):
            e = spec.components[i][j]
            if i != j and e == Num(0.0):
                continue
            lines.append(f"g{i+1}{j+1} = {format_expr(e)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_jet2(spec: MetricSpec, point: Sequence[float]) -> list[list[Jet2]]:
    """Exact value, gradient and Hessian of every metric component at ``point``."""
    xs = [Jet2.variable(float(point[k]), k) for k in range(4)]
    out: list[list[Jet2]] = [[None] * 4 for _ in range(4)]  # type: ignore[list-item]
    for i in range(4):
        for j in range(i, 4):
            out[i][j] = out[j][i] = spec.components[i][j].jet(xs, spec.params)
    return out


def metric_derivatives(spec: MetricSpec, point: Sequence[float]):
    """Return ``(g, dg, ddg)`` with ``dg[k,i,j] = d_k g_ij`` and ``ddg[k,l,i,j]``."""
    jets = eval_jet2(spec, point)
    g = np.empty((4, 4))
    dg = np.empty((4, 4, 4))
    ddg = np.empty((4, 4, 4, 4))
    for i in range(4):
        for j in range(4):
            J = jets[i][j]
            g[i, j] = J.value
            dg[:, i, j] = J.grad
            ddg[:, :, i, j] = J.hess
    return g, dg, ddg


@dataclass
class SampleDiagnostic:
    point: tuple[float, ...]
    evaluable: bool
    symmetric: bool = False
    min_eigenvalue: float = float("nan")
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.evaluable and self.symmetric and self.min_eigenvalue > MIN_EIGENVALUE


@dataclass
class Diagnostics:
    samples: list[SampleDiagnostic]

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.samples)

    @property
    def first_failure(self) -> SampleDiagnostic | None:
        return next((s for s in self.samples if not s.ok), None)

    @property
    def min_eigenvalue(self) -> float:
        return min(s.min_eigenvalue for s in self.samples)


def validate(spec: MetricSpec, samples: Iterable[Sequence[float]]) -> Diagnostics:
    out = []
    for x in samples:
        pt = tuple(float(v) for v in x)
        try:
            g = spec.metric_value(pt)
        except (MetricDomainError, ArithmeticError) as exc:
            out.append(SampleDiagnostic(pt, False, error=str(exc)))
            continue
        if not np.all(np.isfinite(g)):
            out.append(SampleDiagnostic(pt, False, error="non-finite metric value"))
            continue
        sym = bool(np.array_equal(g, g.T))
        lam = float(np.linalg.eigvalsh(g)[0])
        err = None if lam > MIN_EIGENVALUE else f"not positive definite (min eigenvalue {lam!r})"
        out.append(SampleDiagnostic(pt, True, sym, lam, err))
    return Diagnostics(out)
