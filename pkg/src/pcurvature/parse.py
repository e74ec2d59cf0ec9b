"""Reading operators like "(x^2+1)*D^2 - 3*x*D + 1" into DiffOps.

Recursive descent over the Weyl algebra in x and D. Products are taken in the
algebra, so "D*x" means x*D + 1. Integers are reduced mod p.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := power ('*'? power)*
    power  := atom ('^' integer)?
    atom   := integer | 'x' | 'D' | '(' expr ')'
"""

import numpy as np

from . import modring as R
from .diffop import DiffOp, op_mul_naive


class ParseError(ValueError):
    def __init__(self, msg, text="", pos=0):
        super().__init__(msg)
        self.msg = msg
        self.text = text
        self.pos = pos

    def __str__(self):
        if not self.text:
            return self.msg
        return f"{self.msg} at position {self.pos}\n  {self.text}\n  {' ' * self.pos}^"


def _tokens(text):
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            out.append(("int", int(text[i:j]), i))
            i = j
        elif ch in "xD+-*^()":
            out.append((ch, ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", text, i)
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text, p):
        self.text = text
        self.p = p
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise self.error(f"expected {kind!r}")
        self.i += 1
        return tok

    def error(self, msg):
        kind, val, pos = self.toks[self.i]
        got = "end of input" if kind == "end" else repr(self.text[pos])
        return ParseError(f"{msg}, got {got}", self.text, pos)

    # values are dicts {order: coefficient polynomial}, read as sum a_k(x) D^k

    def const(self, c):
        return {0: R.const(c, self.p)}

    def add(self, a, b, sign=1):
        out = dict(a)
        for k, f in b.items():
            g = f if sign > 0 else R.neg(f, self.p)
            out[k] = R.add(out[k], g, self.p) if k in out else g
        return {k: f for k, f in out.items() if len(f)}

    def mul(self, a, b):
        if not a or not b:
            return {}
        return _from_op(op_mul_naive(_to_op(a, self.p), _to_op(b, self.p)))

    def expr(self):
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.take()[0] == "-" else 1
        val = self.add({}, self.term(), sign)
        while self.peek() in ("+", "-"):
            sign = -1 if self.take()[0] == "-" else 1
            val = self.add(val, self.term(), sign)
        return val

    def term(self):
        val = self.power()
        while True:
            if self.peek() == "*":
                self.take()
                val = self.mul(val, self.power())
            elif self.peek() in ("int", "x", "D", "("):
                val = self.mul(val, self.power())
            else:
                return val

    def power(self):
        kind = self.peek()
        base = self.atom()
        if self.peek() != "^":
            return base
        self.take()
        e = self.take("int")[1]
        if kind == "x" and len(base) == 1:
            return {0: R.monomial(e, self.p)}
        if kind == "D":
            return {e: R.const(1, self.p)}
        out = self.const(1)
        for _ in range(e):
            out = self.mul(out, base)
        return out

    def atom(self):
        kind = self.peek()
        if kind == "int":
            return self.const(self.take()[1])
        if kind == "x":
            self.take()
            return {0: R.monomial(1, self.p)}
        if kind == "D":
            self.take()
            return {1: R.const(1, self.p)}
        if kind == "(":
            self.take()
            val = self.expr()
            self.take(")")
            return val
        raise self.error("expected a number, x, D or '('")

    def parse(self):
        val = self.expr()
        if self.peek() != "end":
            raise self.error("unexpected input")
        return val


def _to_op(terms, p):
    if not terms:
        return DiffOp.scalar([[]], p)
    r = max(terms)
    return DiffOp.scalar([terms.get(k, []) for k in range(r + 1)], p)


def _from_op(L):
    return {k: f for k in range(L.order + 1) if len(f := L.scalar_coeff(k))}


def parse_operator(text, p):
    """Right-form D-operator over F_p; raises ParseError on bad syntax or a zero operator."""
    terms = _Parser(text, p).parse()
    if not terms:
        raise ParseError("operator is zero mod p", text, 0)
    return _to_op(terms, p)


def format_poly(f, var="x"):
    """Descending terms, e.g. 'x^2 + 2*x + 1'; '0' for the zero polynomial."""
    f = R.trim(np.asarray(f, dtype=np.int64))
    parts = []
    for k in range(len(f) - 1, -1, -1):
        c = int(f[k])
        if not c:
            continue
        mono = "" if k == 0 else var if k == 1 else f"{var}^{k}"
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        else:
            parts.append(f"{c}*{mono}")
    return " + ".join(parts) if parts else "0"


def format_operator(L):
    parts = []
    for k in range(L.order, -1, -1):
        f = L.scalar_coeff(k)
        if not len(f):
            continue
        coef = format_poly(f)
        if k == 0:
            parts.append(coef)
            continue
        mono = "D" if k == 1 else f"D^{k}"
        if coef == "1":
            parts.append(mono)
        else:
            parts.append(f"({coef})*{mono}")
    return " + ".join(parts) if parts else "0"
