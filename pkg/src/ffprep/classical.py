"""Classical expressions over mid-circuit measurement bits.

Expressions form a small immutable DAG (XOR, AND, OR, NOT, lookup tables)
whose leaves are named measurement bits.  They are used as guards on
feedforward gates.  Every expression has a canonical string form that
round-trips through :func:`parse`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


class Expr:
    """Base class; subclasses are frozen dataclasses."""

    def evaluate(self, values: Mapping[str, int]) -> int:
        raise NotImplementedError

    def bits(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: int

    def evaluate(self, values):
        return self.value & 1

    def bits(self):
        return frozenset()

    def __str__(self):
        return str(self.value & 1)


@dataclass(frozen=True)
class Bit(Expr):
    name: str

    def evaluate(self, values):
        return values[self.name] & 1

    def bits(self):
        return frozenset((self.name,))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def evaluate(self, values):
        return 1 - self.arg.evaluate(values)

    def bits(self):
        return self.arg.bits()

    def __str__(self):
        return f"~{self.arg}"


@dataclass(frozen=True)
class _NAry(Expr):
    args: tuple[Expr, ...]

    symbol = "?"

    def bits(self):
        cached = self.__dict__.get("_bits")
        if cached is None:
            cached = frozenset().union(*(a.bits() for a in self.args))
            object.__setattr__(self, "_bits", cached)
        return cached

    def __str__(self):
        if len(self.args) < 2:
            # a trailing operator keeps short groups unambiguous
            return "(" + "".join(str(a) for a in self.args) + self.symbol + ")"
        return "(" + self.symbol.join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Xor(_NAry):
    symbol = "^"

    def evaluate(self, values):
        v = 0
        for a in self.args:
            v ^= a.evaluate(values)
        return v


@dataclass(frozen=True)
class And(_NAry):
    symbol = "&"

    def evaluate(self, values):
        return int(all(a.evaluate(values) for a in self.args))


@dataclass(frozen=True)
class Or(_NAry):
    symbol = "|"

    def evaluate(self, values):
        return int(any(a.evaluate(values) for a in self.args))


@dataclass(frozen=True)
class Lut(Expr):
    """Truth-table lookup: input k contributes bit k of the table index."""

    inputs: tuple[str, ...]
    table: int

    def evaluate(self, values):
        idx = 0
        for k, name in enumerate(self.inputs):
            idx |= (values[name] & 1) << k
        return (self.table >> idx) & 1

    def bits(self):
        cached = self.__dict__.get("_bits")
        if cached is None:
            cached = frozenset(self.inputs)
            object.__setattr__(self, "_bits", cached)
        return cached

    def __str__(self):
        return f"lut:{self.table:x}[{','.join(self.inputs)}]"


def const(v: int) -> Expr:
    return Const(v & 1)


def bit(name: str) -> Expr:
    return Bit(name)


def parity(terms: Iterable[Expr | str]) -> Expr:
    """XOR of the given terms, with constants folded and pairs cancelled."""
    flip = 0
    counts: dict[Expr | str, int] = {}
    for t in terms:
        if type(t) is Bit:
            t = t.name
        elif isinstance(t, Const):
            flip ^= t.value
            continue
        counts[t] = counts.get(t, 0) ^ 1
    args = tuple(Bit(e) if isinstance(e, str) else e for e, c in counts.items() if c)
    if not args:
        return Const(flip)
    core = args[0] if len(args) == 1 else Xor(args)
    return Not(core) if flip else core


def lookup(inputs: Iterable[str], fn) -> Expr:
    """Tabulate ``fn(bits_tuple) -> 0/1`` over all assignments of ``inputs``."""
    inputs = tuple(inputs)
    table = 0
    for idx in range(1 << len(inputs)):
        bits_ = tuple((idx >> k) & 1 for k in range(len(inputs)))
        if fn(bits_) & 1:
            table |= 1 << idx
    if table == 0:
        return Const(0)
    if table == (1 << (1 << len(inputs))) - 1:
        return Const(1)
    return Lut(inputs, table)


# -- parsing -----------------------------------------------------------------


class ParseError(ValueError):
    pass


def parse(text: str) -> Expr:
    expr, pos = _parse(text, 0)
    if pos != len(text):
        raise ParseError(f"trailing input at {pos}: {text!r}")
    return expr


def _parse(s: str, i: int) -> tuple[Expr, int]:
    if i >= len(s):
        raise ParseError("unexpected end of expression")
    c = s[i]
    if c == "~":
        arg, i = _parse(s, i + 1)
        return Not(arg), i
    if c == "(":
        args = []
        op = None
        i += 1
        if s.startswith((")", "^)", "&)", "|)"), i) and s[i] != ")":
            op = s[i]
            i += 2
        else:
            while True:
                arg, i = _parse(s, i)
                args.append(arg)
                if i >= len(s):
                    raise ParseError("unclosed '('")
                if s[i] == ")":
                    i += 1
                    break
                if op is None:
                    op = s[i]
                elif s[i] != op:
                    raise ParseError(f"mixed operators in group at {i}")
                i += 1
                if i < len(s) and s[i] == ")" and len(args) == 1:
                    i += 1
                    break
        cls = {"^": Xor, "&": And, "|": Or}.get(op)
        if cls is None:
            raise ParseError(f"bad operator {op!r}")
        return cls(tuple(args)), i
    if s.startswith("lut:", i):
        j = s.index("[", i)
        table = int(s[i + 4 : j], 16)
        k = s.index("]", j)
        names = tuple(s[j + 1 : k].split(",")) if k > j + 1 else ()
        return Lut(names, table), k + 1
    if c in "01":
        return Const(int(c)), i + 1
    j = i
    while j < len(s) and (s[j].isalnum() or s[j] == "_"):
        j += 1
    if j == i:
        raise ParseError(f"unexpected character {c!r} at {i}")
    return Bit(s[i:j]), j
