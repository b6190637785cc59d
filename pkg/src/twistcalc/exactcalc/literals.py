"""Text syntax for exact scalars, used by spec files and the CLI.

Grammar (whitespace ignored):

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := rational | root | '(' expr ')'
    root   := 'z' digits ('^' '-'? digits)?
    rational := '-'? digits ('/' digits)?

Examples: "1/2*z8^3 - 2", "z3^2 + z3 + 1", "-(1/3)*z4".
Canonical printing is Scalar.__str__, which reduces modulo the cyclotomic
polynomial; parse(str(s)) == s for every scalar s.
"""

import re

from twistcalc.kernel import rat
from twistcalc.exactcalc.scalar import Scalar

_TOKEN = re.compile(r"\s*(\d+|z\d+|[()^*/+-])")


class ScalarSyntaxError(ValueError):
    pass


def _tokenize(text):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ScalarSyntaxError(f"bad scalar literal at offset {pos}: {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, text):
        self.toks = tokens
        self.i = 0
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ScalarSyntaxError(f"unexpected end of scalar literal: {self.text!r}")
        self.i += 1
        return tok

    def expr(self):
        val = self.term()
        while self.peek() in ("+", "-"):
            op = self.next()
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.factor()
        while self.peek() == "*":
            self.next()
            val = val * self.factor()
        return val

    def factor(self):
        tok = self.next()
        if tok == "-":
            return -self.factor()
        if tok == "(":
            val = self.expr()
            if self.next() != ")":
                raise ScalarSyntaxError(f"unbalanced parenthesis in {self.text!r}")
            return val
        if tok.startswith("z"):
            n = int(tok[1:])
            if n < 1:
                raise ScalarSyntaxError(f"root order must be positive: {tok}")
            k = 1
            if self.peek() == "^":
                self.next()
                neg = False
                t = self.next()
                if t == "-":
                    neg = True
                    t = self.next()
                if not t.isdigit():
                    raise ScalarSyntaxError(f"bad exponent in {self.text!r}")
                k = -int(t) if neg else int(t)
            return Scalar.zeta(n, k)
        if tok.isdigit():
            num = int(tok)
            if self.peek() == "/":
                self.next()
                den = self.next()
                if not den.isdigit() or int(den) == 0:
                    raise ScalarSyntaxError(f"bad denominator in {self.text!r}")
                return Scalar.rational(rat(num, int(den)))
            return Scalar.rational(num)
        raise ScalarSyntaxError(f"unexpected token {tok!r} in {self.text!r}")


def parse_scalar(text):
    if isinstance(text, Scalar):
        return text
    if isinstance(text, int):
        return Scalar.rational(text)
    p = _Parser(_tokenize(text), text)
    val = p.expr()
    if p.peek() is not None:
        raise ScalarSyntaxError(f"trailing tokens in scalar literal {text!r}")
    return val
