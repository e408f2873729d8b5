"""Analytic side functions: a small expression language with exact derivatives.

Side definitions such as ``-pi*alpha^4 + 2*pi`` are parsed by recursive
descent into an immutable AST and evaluated on dual numbers, so the first
derivative with respect to ``alpha`` comes out exact to machine rounding
rather than through a difference quotient.

Grammar (tightest binding first):

    atom    := NUMBER | 'pi' | 'alpha' | IDENT '(' expr ')' | '(' expr ')'
    power   := atom ('^' factor)?          right associative
    factor  := '-' factor | power          unary minus binds below '^'
    term    := factor (('*' | '/') factor)*
    expr    := term (('+' | '-') term)*

The only callable names are sin, cos, arccos, sqrt, abs, exp and ln; anything
else is rejected at parse time.  ``^`` with a non-integer exponent requires a
non-negative base at evaluation time.
"""

from __future__ import annotations

import numpy as np

FUNCTIONS = ("abs", "arccos", "cos", "exp", "ln", "sin", "sqrt")

_RESERVED = ("alpha", "pi")


class ExprError(ValueError):
    """Base class for expression language failures."""


class ExprSyntaxError(ExprError):
    """Source text does not match the grammar.

    Carries the character offset of the failure and the set of token kinds
    that would have been accepted there.
    """

    def __init__(self, offset, expected, found):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        self.found = found
        super().__init__(
            "syntax error at offset %d: expected %s, found %s"
            % (offset, " | ".join(self.expected), found)
        )


class UnknownIdentifierError(ExprError):
    """An identifier other than alpha, pi or a known function name."""

    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(
            "unknown identifier '%s' at offset %d (allowed: %s)"
            % (name, offset, ", ".join(_RESERVED + FUNCTIONS))
        )


class ExprDomainError(ExprError):
    """Evaluation left a function's domain; names the offending subexpression."""

    def __init__(self, reason, subexpr, offset):
        self.reason = reason
        self.subexpr = subexpr
        self.offset = offset
        super().__init__(
            "%s in '%s' at offset %d" % (reason, subexpr, offset)
        )


class Dual:
    """A value paired with its derivative, under the usual dual-number rules."""

    __slots__ = ("val", "dot")

    def __init__(self, val, dot=0.0):
        self.val = val
        self.dot = dot

    def __add__(self, other):
        return Dual(self.val + other.val, self.dot + other.dot)

    def __sub__(self, other):
        return Dual(self.val - other.val, self.dot - other.dot)

    def __mul__(self, other):
        return Dual(
            self.val * other.val,
            self.dot * other.val + self.val * other.dot,
        )

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __repr__(self):
        return "Dual(%r, %r)" % (self.val, self.dot)


class DualValue:
    """The result of eval_dual: f(alpha) and f'(alpha)."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv):
        self.value = value
        self.deriv = deriv

    def __iter__(self):
        return iter((self.value, self.deriv))

    def __repr__(self):
        return "DualValue(value=%r, deriv=%r)" % (self.value, self.deriv)


class _Domain(Exception):
    """Internal carrier for a domain violation, caught at the AST node."""

    def __init__(self, reason):
        self.reason = reason


def _div(a, b):
    if np.any(b.val == 0):
        raise _Domain("division by zero")
    return Dual(a.val / b.val, (a.dot * b.val - a.val * b.dot) / (b.val * b.val))


def _pow(a, b):
    # Constant integer exponents work on any base (plain power rule);
    # everything else goes through exp(b ln a) and needs a non-negative base.
    b_val = b.val
    if np.all(b.dot == 0) and np.ndim(b_val) == 0 and float(b_val).is_integer():
        k = float(b_val)
        if np.any(a.val == 0) and k < 2:
            if k >= 1:
                return Dual(a.val ** k, k * a.dot)
            raise _Domain("zero base with exponent %g" % k)
        return Dual(a.val ** k, k * a.val ** (k - 1) * a.dot)
    if np.any(a.val < 0):
        raise _Domain("negative base with non-integer exponent")
    if np.any(a.val == 0):
        if np.ndim(a.val) or np.ndim(b_val):
            raise _Domain("zero base with non-constant exponent on an array")
        if b_val <= 0:
            raise _Domain("zero base with non-positive exponent")
        if b_val < 1 and np.any(a.dot != 0):
            raise _Domain("zero base with fractional exponent (infinite slope)")
        dot = a.dot if b_val == 1 else 0.0
        return Dual(0.0, dot)
    v = a.val ** b_val
    return Dual(v, v * (b.dot * np.log(a.val) + b_val * a.dot / a.val))


def _sin(a):
    return Dual(np.sin(a.val), np.cos(a.val) * a.dot)


def _cos(a):
    return Dual(np.cos(a.val), -np.sin(a.val) * a.dot)


def _arccos(a):
    if np.any(np.abs(a.val) > 1):
        raise _Domain("arccos argument outside [-1, 1]")
    flat = 1.0 - a.val * a.val
    if np.any((flat == 0) & (a.dot != 0)):
        raise _Domain("arccos argument at +/-1 (infinite slope)")
    with np.errstate(divide="ignore", invalid="ignore"):
        dot = np.where(flat == 0, 0.0, -a.dot / np.sqrt(np.where(flat == 0, 1.0, flat)))
    return Dual(np.arccos(a.val), dot[()] if np.ndim(dot) == 0 else dot)


def _sqrt(a):
    if np.any(a.val < 0):
        raise _Domain("square root of a negative value")
    if np.any((a.val == 0) & (a.dot != 0)):
        raise _Domain("square root at 0 (infinite slope)")
    root = np.sqrt(a.val)
    with np.errstate(divide="ignore", invalid="ignore"):
        dot = np.where(a.val == 0, 0.0, a.dot / (2.0 * np.where(a.val == 0, 1.0, root)))
    return Dual(root, dot[()] if np.ndim(dot) == 0 else dot)


def _abs(a):
    return Dual(np.abs(a.val), np.sign(a.val) * a.dot)


def _exp(a):
    v = np.exp(a.val)
    return Dual(v, v * a.dot)


def _ln(a):
    if np.any(a.val <= 0):
        raise _Domain("logarithm of a non-positive value")
    return Dual(np.log(a.val), a.dot / a.val)


_CALLS = {
    "sin": _sin,
    "cos": _cos,
    "arccos": _arccos,
    "sqrt": _sqrt,
    "abs": _abs,
    "exp": _exp,
    "ln": _ln,
}


# --- AST nodes --------------------------------------------------------------
#
# Every node carries its (start, end) character span so evaluation errors can
# quote the offending subexpression.  Spans never take part in equality; two
# trees compare equal when they are structurally identical.


class Num:
    __slots__ = ("value", "span")

    def __init__(self, value, span):
        self.value = value
        self.span = span

    def eval(self, alpha, src):
        return Dual(self.value, 0.0)

    def key(self):
        return ("num", self.value)

    def unparse(self):
        return repr(self.value)


class Pi:
    __slots__ = ("span",)

    def __init__(self, span):
        self.span = span

    def eval(self, alpha, src):
        return Dual(np.pi, 0.0)

    def key(self):
        return ("pi",)

    def unparse(self):
        return "pi"


class Alpha:
    __slots__ = ("span",)

    def __init__(self, span):
        self.span = span

    def eval(self, alpha, src):
        return alpha

    def key(self):
        return ("alpha",)

    def unparse(self):
        return "alpha"


class Neg:
    __slots__ = ("operand", "span")

    def __init__(self, operand, span):
        self.operand = operand
        self.span = span

    def eval(self, alpha, src):
        return -self.operand.eval(alpha, src)

    def key(self):
        return ("neg", self.operand.key())

    def unparse(self):
        return "(-%s)" % self.operand.unparse()


class Call:
    __slots__ = ("name", "arg", "span")

    def __init__(self, name, arg, span):
        self.name = name
        self.arg = arg
        self.span = span

    def eval(self, alpha, src):
        arg = self.arg.eval(alpha, src)
        try:
            return _CALLS[self.name](arg)
        except _Domain as exc:
            raise ExprDomainError(
                exc.reason, src[self.span[0]:self.span[1]], self.span[0]
            ) from None

    def key(self):
        return ("call", self.name, self.arg.key())

    def unparse(self):
        return "%s(%s)" % (self.name, self.arg.unparse())


class Bin:
    __slots__ = ("op", "left", "right", "span")

    def __init__(self, op, left, right, span):
        self.op = op
        self.left = left
        self.right = right
        self.span = span

    def eval(self, alpha, src):
        a = self.left.eval(alpha, src)
        b = self.right.eval(alpha, src)
        try:
            if self.op == "+":
                return a + b
            if self.op == "-":
                return a - b
            if self.op == "*":
                return a * b
            if self.op == "/":
                return _div(a, b)
            return _pow(a, b)
        except _Domain as exc:
            raise ExprDomainError(
                exc.reason, src[self.span[0]:self.span[1]], self.span[0]
            ) from None

    def key(self):
        return ("bin", self.op, self.left.key(), self.right.key())

    def unparse(self):
        return "(%s %s %s)" % (self.left.unparse(), self.op, self.right.unparse())


class ExprAst:
    """An immutable parsed expression in the single variable alpha."""

    __slots__ = ("root", "source")

    def __init__(self, root, source):
        self.root = root
        self.source = source

    def __eq__(self, other):
        return isinstance(other, ExprAst) and self.root.key() == other.root.key()

    def __hash__(self):
        return hash(self.root.key())

    def __str__(self):
        return self.unparse()

    def unparse(self):
        """Text that reparses to a structurally identical tree."""
        return self.root.unparse()

    def eval_many(self, alphas):
        """Vectorized evaluation: (values, derivs) over an alpha array."""
        alphas = np.asarray(alphas, dtype=float)
        out = self.root.eval(Dual(alphas, np.ones_like(alphas)), self.source)
        return (
            np.broadcast_to(out.val, alphas.shape).astype(float, copy=True),
            np.broadcast_to(out.dot, alphas.shape).astype(float, copy=True),
        )


# --- Tokenizer and parser ---------------------------------------------------

_T_NUM, _T_IDENT, _T_OP, _T_LPAREN, _T_RPAREN, _T_END = range(6)

_KIND_LABEL = {
    _T_NUM: "number",
    _T_IDENT: "identifier",
    _T_LPAREN: "'('",
    _T_RPAREN: "')'",
    _T_END: "end of input",
}


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def label(self):
        if self.kind == _T_OP:
            return "'%s'" % self.text
        if self.kind == _T_END:
            return "end of input"
        return "'%s'" % self.text


def _tokenize(source):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(i, ("number",), "'%s'" % text) from None
            tokens.append(_Token(_T_NUM, text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token(_T_IDENT, source[i:j], i))
            i = j
            continue
        if c in "+-*/^":
            tokens.append(_Token(_T_OP, c, i))
            i += 1
            continue
        if c == "(":
            tokens.append(_Token(_T_LPAREN, c, i))
            i += 1
            continue
        if c == ")":
            tokens.append(_Token(_T_RPAREN, c, i))
            i += 1
            continue
        raise ExprSyntaxError(i, ("number", "identifier", "operator", "'('", "')'"),
                              "'%s'" % c)
    tokens.append(_Token(_T_END, "", n))
    return tokens


_ATOM_EXPECTED = ("number", "'pi'", "'alpha'", "function name", "'('", "'-'")


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_op(self, *ops):
        tok = self.peek()
        return tok.kind == _T_OP and tok.text in ops

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != _T_END:
            raise ExprSyntaxError(tok.pos, ("operator", "end of input"), tok.label())
        return node

    # expr := term (('+' | '-') term)*
    def expr(self):
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            rhs = self.term()
            node = Bin(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    # term := factor (('*' | '/') factor)*
    def term(self):
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.advance().text
            rhs = self.factor()
            node = Bin(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    # factor := '-' factor | power
    def factor(self):
        if self.at_op("-"):
            tok = self.advance()
            operand = self.factor()
            return Neg(operand, (tok.pos, operand.span[1]))
        return self.power()

    # power := atom ('^' factor)?   right associative, '^' above unary minus
    def power(self):
        node = self.atom()
        if self.at_op("^"):
            self.advance()
            rhs = self.factor()
            node = Bin("^", node, rhs, (node.span[0], rhs.span[1]))
        return node

    def atom(self):
        tok = self.peek()
        if tok.kind == _T_NUM:
            self.advance()
            return Num(float(tok.text), (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == _T_IDENT:
            self.advance()
            if tok.text == "pi":
                return Pi((tok.pos, tok.pos + 2))
            if tok.text == "alpha":
                return Alpha((tok.pos, tok.pos + 5))
            if tok.text in _CALLS:
                opener = self.peek()
                if opener.kind != _T_LPAREN:
                    raise ExprSyntaxError(opener.pos, ("'('",), opener.label())
                self.advance()
                arg = self.expr()
                closer = self.peek()
                if closer.kind != _T_RPAREN:
                    raise ExprSyntaxError(closer.pos, ("')'", "operator"),
                                          closer.label())
                self.advance()
                return Call(tok.text, arg, (tok.pos, closer.pos + 1))
            raise UnknownIdentifierError(tok.text, tok.pos)
        if tok.kind == _T_LPAREN:
            self.advance()
            node = self.expr()
            closer = self.peek()
            if closer.kind != _T_RPAREN:
                raise ExprSyntaxError(closer.pos, ("')'", "operator"), closer.label())
            self.advance()
            return node
        raise ExprSyntaxError(tok.pos, _ATOM_EXPECTED, tok.label())


def parse_expression(source):
    """Parse source text into an ExprAst; raises ExprSyntaxError on bad input."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError(0, _ATOM_EXPECTED, "empty input")
    return ExprAst(_Parser(source).parse(), source)


def eval_dual(ast, alpha):
    """Evaluate f(alpha) and f'(alpha) exactly; alpha must lie in [0, 1]."""
    if not -1e-12 <= alpha <= 1 + 1e-12:
        raise ValueError("alpha must lie in [0, 1], got %r" % (alpha,))
    out = ast.root.eval(Dual(float(alpha), 1.0), ast.source)
    return DualValue(float(out.val), float(out.dot))
