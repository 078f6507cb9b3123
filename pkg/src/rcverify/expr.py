"""Typed expressions, type environments and substitutions.

Everything here is immutable.  Variables are identified by a *key*: the bare
name for machine-level variables (``gs``) or ``r:gs`` once a variable has been
moved into the ``r`` namespace by frame extension.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Iterator, Mapping, NamedTuple, Union

# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class IntT:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class EnumT:
    name: str
    constructors: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.constructors:
            raise ValueError(f"enumeration {self.name} has no constructors")
        if len(set(self.constructors)) != len(self.constructors):
            raise ValueError(f"enumeration {self.name} has duplicate constructors")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class SeqT:
    # elem is None only for the type of the empty literal before unification
    elem: "TypeExpr | None"

    def __str__(self) -> str:
        return f"Seq({self.elem if self.elem is not None else '?'})"


@dataclass(frozen=True)
class AbstractT:
    name: str

    def __str__(self) -> str:
        return self.name


TypeExpr = Union[BoolT, IntT, EnumT, SeqT, AbstractT]

BOOL = BoolT()
INT = IntT()


def compatible(a: TypeExpr, b: TypeExpr) -> bool:
    """Type equality, with ``Seq(?)`` matching any sequence type."""
    if isinstance(a, SeqT) and isinstance(b, SeqT):
        if a.elem is None or b.elem is None:
            return True
        return compatible(a.elem, b.elem)
    return a == b


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

NAMESPACE = "r"


@dataclass(frozen=True)
class Var:
    name: str
    ns: str | None = None

    @property
    def key(self) -> str:
        return f"{self.ns}:{self.name}" if self.ns else self.name

    @staticmethod
    def from_key(key: str) -> "Var":
        if ":" in key:
            ns, name = key.split(":", 1)
            return Var(name, ns)
        return Var(key)

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True)
class IntLit:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolLit:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class EnumLit:
    type: str
    constructor: str

    def __str__(self) -> str:
        return self.constructor


@dataclass(frozen=True)
class EmptySeq:
    def __str__(self) -> str:
        return "⟨⟩"


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Expr", ...]

    def __str__(self) -> str:
        return to_display(self)


@dataclass(frozen=True)
class UnOp:
    op: str  # "not" | "neg"
    arg: "Expr"

    def __str__(self) -> str:
        return to_display(self)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return to_display(self)


@dataclass(frozen=True)
class Forall:
    bound: tuple[tuple[str, TypeExpr], ...]
    body: "Expr"

    def __str__(self) -> str:
        return to_display(self)


Expr = Union[Var, IntLit, BoolLit, EnumLit, EmptySeq, App, UnOp, BinOp, Forall]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

LOGIC_OPS = {"and", "or", "implies"}
EQ_OPS = {"eq", "ne"}
ORD_OPS = {"lt", "le", "gt", "ge"}
ARITH_OPS = {"add", "sub", "mul"}
BIN_OPS = LOGIC_OPS | EQ_OPS | ORD_OPS | ARITH_OPS


def conj(*es: Expr) -> Expr:
    es = tuple(e for e in es if e != TRUE)
    if not es:
        return TRUE
    out = es[-1]
    for e in reversed(es[:-1]):
        out = BinOp("and", e, out)
    return out


def disj(es: Iterable[Expr]) -> Expr:
    """Right-nested disjunction; the empty disjunction is ``false``."""
    es = tuple(es)
    if not es:
        return FALSE
    out = es[-1]
    for e in reversed(es[:-1]):
        out = BinOp("or", e, out)
    return out


def neg(e: Expr) -> Expr:
    return UnOp("not", e)


def implies(a: Expr, b: Expr) -> Expr:
    return BinOp("implies", a, b)


def eq(a: Expr, b: Expr) -> Expr:
    return BinOp("eq", a, b)


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, App):
        return e.args
    if isinstance(e, UnOp):
        return (e.arg,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Forall):
        return (e.body,)
    return ()


def subterms(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from subterms(c)


def free_vars(e: Expr) -> set[str]:
    """Keys of the variables (and constants) occurring free in ``e``."""
    if isinstance(e, Var):
        return {e.key}
    if isinstance(e, Forall):
        return free_vars(e.body) - {name for name, _ in e.bound}
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def map_vars(e: Expr, fn: Callable[[Var], Expr]) -> Expr:
    """Rebuild ``e`` replacing every free variable occurrence by ``fn(var)``."""
    if isinstance(e, Var):
        return fn(e)
    if isinstance(e, App):
        return App(e.fn, tuple(map_vars(a, fn) for a in e.args))
    if isinstance(e, UnOp):
        return UnOp(e.op, map_vars(e.arg, fn))
    if isinstance(e, BinOp):
        return BinOp(e.op, map_vars(e.left, fn), map_vars(e.right, fn))
    if isinstance(e, Forall):
        bound = {name for name, _ in e.bound}
        return Forall(e.bound, map_vars(e.body, lambda v: v if v.key in bound else fn(v)))
    return e


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {
    "implies": 1, "or": 2, "and": 3,
    "eq": 5, "ne": 5, "lt": 5, "le": 5, "gt": 5, "ge": 5,
    "add": 6, "sub": 6, "mul": 7,
}

DISPLAY_SYMBOLS = {
    "implies": "⇒", "or": "∨", "and": "∧", "not": "¬", "neg": "-",
    "eq": "=", "ne": "≠", "lt": "<", "le": "≤", "gt": ">", "ge": "≥",
    "add": "+", "sub": "-", "mul": "×", "empty": "⟨⟩",
}

TEXT_SYMBOLS = {
    "implies": "=>", "or": "or", "and": "and", "not": "not ", "neg": "-",
    "eq": "=", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
    "add": "+", "sub": "-", "mul": "*", "empty": "<>",
}


def _render(e: Expr, sym: Mapping[str, str], ctx: int) -> str:
    if isinstance(e, Var):
        return e.key
    if isinstance(e, (IntLit, BoolLit, EnumLit)):
        if isinstance(e, IntLit) and e.value < 0 and ctx > 0:
            return f"({e.value})"
        return str(e)
    if isinstance(e, EmptySeq):
        return sym["empty"]
    if isinstance(e, App):
        return f"{e.fn}({', '.join(_render(a, sym, 0) for a in e.args)})"
    if isinstance(e, UnOp):
        prec = 4 if e.op == "not" else 8
        inner = _render(e.arg, sym, prec)
        if e.op == "neg" and isinstance(e.arg, IntLit):
            inner = f"({inner})"
        s = sym[e.op] + inner
        return f"({s})" if ctx > prec else s
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        # implies is right associative, comparisons are non-associative
        if e.op == "implies":
            lp, rp = prec + 1, prec
        elif prec == 5:
            lp, rp = prec + 1, prec + 1
        elif e.op in ("and", "or"):
            lp, rp = prec + 1, prec
        else:
            lp, rp = prec, prec + 1
        s = f"{_render(e.left, sym, lp)} {sym[e.op]} {_render(e.right, sym, rp)}"
        return f"({s})" if ctx > prec else s
    if isinstance(e, Forall):
        names = ", ".join(name for name, _ in e.bound)
        s = f"∀{names} • {_render(e.body, sym, 0)}"
        return f"({s})" if ctx > 0 else s
    raise TypeError(f"not an expression: {e!r}")


def to_display(e: Expr) -> str:
    """Mathematical rendering used in reports and IR pretty-printing."""
    return _render(e, DISPLAY_SYMBOLS, 0)


def to_text(e: Expr) -> str:
    """ASCII rendering accepted back by the machine parser."""
    return _render(e, TEXT_SYMBOLS, 0)


# ---------------------------------------------------------------------------
# Type environment and type checking
# ---------------------------------------------------------------------------


class TypeCheckError(Exception):
    def __init__(self, message: str, term: Any = None):
        super().__init__(message)
        self.term = term


@dataclass(frozen=True)
class TypeEnv:
    vars: Mapping[str, TypeExpr] = field(default_factory=dict)
    consts: Mapping[str, TypeExpr] = field(default_factory=dict)
    funs: Mapping[str, tuple[tuple[TypeExpr, ...], TypeExpr]] = field(default_factory=dict)
    events: Mapping[str, TypeExpr | None] = field(default_factory=dict)
    types: Mapping[str, TypeExpr] = field(default_factory=dict)
    const_values: Mapping[str, Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        spaces = [set(self.vars), set(self.consts), set(self.funs), set(self.events)]
        for a, b in itertools.combinations(spaces, 2):
            clash = a & b
            if clash:
                raise TypeCheckError(f"name declared twice: {sorted(clash)[0]}")

    def constructor(self, name: str) -> EnumT | None:
        for t in self.types.values():
            if isinstance(t, EnumT) and name in t.constructors:
                return t
        return None

    def enum(self, name: str) -> EnumT:
        t = self.types.get(name)
        if not isinstance(t, EnumT):
            raise TypeCheckError(f"unknown enumeration {name}")
        return t

    def var_type(self, v: Var) -> TypeExpr:
        if v.name in self.vars:
            return self.vars[v.name]
        if v.ns is None and v.name in self.consts:
            return self.consts[v.name]
        raise TypeCheckError(f"unknown identifier {v.key}", v)

    def is_const(self, key: str) -> bool:
        return key in self.consts

    def with_vars(self, extra: Mapping[str, TypeExpr]) -> "TypeEnv":
        return replace(self, vars={**self.vars, **extra})

    def with_types(self, extra: Mapping[str, TypeExpr]) -> "TypeEnv":
        return replace(self, types={**self.types, **extra})


def type_check(env: TypeEnv, e: Expr, bound: Mapping[str, TypeExpr] | None = None) -> TypeExpr:
    """Return the type of ``e`` or raise :class:`TypeCheckError` at the first bad subterm."""
    bound = bound or {}
    if isinstance(e, Var):
        if e.key in bound:
            return bound[e.key]
        return env.var_type(e)
    if isinstance(e, IntLit):
        return INT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, EnumLit):
        t = env.enum(e.type)
        if e.constructor not in t.constructors:
            raise TypeCheckError(f"{e.constructor} is not a constructor of {e.type}", e)
        return t
    if isinstance(e, EmptySeq):
        return SeqT(None)
    if isinstance(e, App):
        if e.fn not in env.funs:
            raise TypeCheckError(f"unknown function {e.fn}", e)
        params, result = env.funs[e.fn]
        if len(params) != len(e.args):
            raise TypeCheckError(
                f"{e.fn} expects {len(params)} argument(s), got {len(e.args)}", e)
        for p, a in zip(params, e.args):
            t = type_check(env, a, bound)
            if not compatible(p, t):
                raise TypeCheckError(f"argument {to_display(a)} of {e.fn} has type {t}, expected {p}", a)
        return result
    if isinstance(e, UnOp):
        t = type_check(env, e.arg, bound)
        want = BOOL if e.op == "not" else INT
        if t != want:
            raise TypeCheckError(f"operand of {e.op} must be {want}, got {t}", e)
        return want
    if isinstance(e, BinOp):
        lt = type_check(env, e.left, bound)
        rt = type_check(env, e.right, bound)
        if e.op in LOGIC_OPS:
            if lt != BOOL or rt != BOOL:
                raise TypeCheckError(f"operands of {e.op} must be bool", e)
            return BOOL
        if e.op in EQ_OPS:
            if not compatible(lt, rt):
                raise TypeCheckError(f"cannot compare {lt} with {rt}", e)
            return BOOL
        if lt != INT or rt != INT:
            raise TypeCheckError(f"operands of {e.op} must be int", e)
        return BOOL if e.op in ORD_OPS else INT
    if isinstance(e, Forall):
        return type_check(env, e.body, {**bound, **dict(e.bound)})
    raise TypeCheckError(f"not an expression: {e!r}", e)


def check_bool(env: TypeEnv, e: Expr) -> None:
    if type_check(env, e) != BOOL:
        raise TypeCheckError(f"{to_display(e)} is not boolean", e)


# ---------------------------------------------------------------------------
# Substitutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subst:
    """A finite state update ``{x ↦ e, ...}``; unmapped variables keep their value."""

    entries: tuple[tuple[str, Expr], ...] = ()

    @staticmethod
    def of(mapping: Mapping[str, Expr] | Iterable[tuple[str, Expr]] = ()) -> "Subst":
        items = dict(mapping)
        return Subst(tuple(sorted(items.items())))

    @property
    def mapping(self) -> dict[str, Expr]:
        return dict(self.entries)

    def keys(self) -> list[str]:
        return [k for k, _ in self.entries]

    def get(self, key: str, default: Expr | None = None) -> Expr | None:
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def __contains__(self, key: str) -> bool:
        return any(k == key for k, _ in self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def without(self, keys: Iterable[str]) -> "Subst":
        drop = set(keys)
        return Subst(tuple((k, v) for k, v in self.entries if k not in drop))

    def map_values(self, fn: Callable[[Expr], Expr]) -> "Subst":
        return Subst(tuple((k, fn(v)) for k, v in self.entries))

    def __str__(self) -> str:
        return "⟨" + ", ".join(f"{k} ↦ {to_display(v)}" for k, v in self.entries) + "⟩"


def subst_check(env: TypeEnv, sigma: Subst) -> None:
    for key, value in sigma.entries:
        var = Var.from_key(key)
        if var.ns is None and key in env.consts:
            raise TypeCheckError(f"constant {key} cannot be updated", var)
        vt = env.var_type(var)
        et = type_check(env, value)
        if not compatible(vt, et):
            raise TypeCheckError(f"cannot assign {to_display(value)} : {et} to {key} : {vt}", value)


def subst_apply(sigma: Subst, e: Expr) -> Expr:
    """Replace every free ``Var x`` with ``σ(x)``; no simplification."""
    if not sigma:
        return e
    table = sigma.mapping
    return map_vars(e, lambda v: table.get(v.key, v))


def subst_compose(rho: Subst, sigma: Subst) -> Subst:
    """The update "apply σ first, then ρ" (written ρ ∘ σ)."""
    out = {k: constant_fold(subst_apply(sigma, v)) for k, v in rho.entries}
    for k, v in sigma.entries:
        out.setdefault(k, v)
    return Subst.of(out)


# ---------------------------------------------------------------------------
# Constant folding
# ---------------------------------------------------------------------------


def is_literal(e: Expr) -> bool:
    return isinstance(e, (IntLit, BoolLit, EnumLit, EmptySeq))


def _lit_value(e: Expr) -> Any:
    if isinstance(e, (IntLit, BoolLit)):
        return e.value
    if isinstance(e, EnumLit):
        return e
    return ()


def _int(k: int) -> Expr:
    return IntLit(k)


def _offset(e: Expr) -> tuple[Expr, int]:
    if isinstance(e, BinOp) and isinstance(e.right, IntLit):
        if e.op == "add":
            return e.left, e.right.value
        if e.op == "sub":
            return e.left, -e.right.value
    return e, 0


def _with_offset(base: Expr, k: int) -> Expr:
    if k == 0:
        return base
    if k > 0:
        return BinOp("add", base, IntLit(k))
    return BinOp("sub", base, IntLit(-k))


def constant_fold(e: Expr) -> Expr:
    """Evaluate ground subterms and apply unit/zero identities, bottom-up."""
    if isinstance(e, App):
        return App(e.fn, tuple(constant_fold(a) for a in e.args))
    if isinstance(e, Forall):
        body = constant_fold(e.body)
        return body if isinstance(body, BoolLit) else Forall(e.bound, body)
    if isinstance(e, UnOp):
        a = constant_fold(e.arg)
        if e.op == "not":
            if isinstance(a, BoolLit):
                return BoolLit(not a.value)
            if isinstance(a, UnOp) and a.op == "not":
                return a.arg
        elif isinstance(a, IntLit):
            return IntLit(-a.value)
        return UnOp(e.op, a)
    if isinstance(e, BinOp):
        return _fold_bin(e.op, constant_fold(e.left), constant_fold(e.right))
    return e


def _fold_bin(op: str, l: Expr, r: Expr) -> Expr:
    if is_literal(l) and is_literal(r):
        return _literal(apply_op(op, _lit_value(l), _lit_value(r)))
    if op == "and":
        if l == TRUE:
            return r
        if r == TRUE:
            return l
        if FALSE in (l, r):
            return FALSE
    elif op == "or":
        if l == FALSE:
            return r
        if r == FALSE:
            return l
        if TRUE in (l, r):
            return TRUE
    elif op == "implies":
        if l == TRUE:
            return r
        if l == FALSE or r == TRUE:
            return TRUE
        if r == FALSE:
            return constant_fold(neg(l))
    elif op in EQ_OPS:
        if l == r:
            return BoolLit(op == "eq")
    elif op in ("add", "sub"):
        if isinstance(r, IntLit):
            base, k = _offset(l)
            return _with_offset(base, k + (r.value if op == "add" else -r.value))
        if op == "add" and isinstance(l, IntLit):
            base, k = _offset(r)
            return _with_offset(base, k + l.value)
    elif op == "mul":
        for a, b in ((l, r), (r, l)):
            if a == IntLit(1):
                return b
            if a == IntLit(0):
                return IntLit(0)
    return BinOp(op, l, r)


def _literal(v: Any) -> Expr:
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        return IntLit(v)
    if isinstance(v, EnumLit):
        return v
    if v == ():
        return EmptySeq()
    raise ValueError(f"no literal for {v!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class Token(NamedTuple):
    """A value of an abstract type (or an opaque sequence element)."""

    type: str
    index: int

    def __str__(self) -> str:
        return f"{self.type}#{self.index}"


def apply_op(op: str, a: Any, b: Any) -> Any:
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "implies":
        return (not a) or b
    if op == "eq":
        return a == b
    if op == "ne":
        return a != b
    if op == "lt":
        return a < b
    if op == "le":
        return a <= b
    if op == "gt":
        return a > b
    if op == "ge":
        return a >= b
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operator {op}")


class EvalError(Exception):
    pass


def evaluate(e: Expr, values: Mapping[str, Any],
             call: Callable[[str, tuple], Any] | None = None) -> Any:
    """Evaluate ``e`` under a valuation of variable keys (constants included)."""
    if isinstance(e, Var):
        try:
            return values[e.key]
        except KeyError:
            raise EvalError(f"no value for {e.key}") from None
    if isinstance(e, (IntLit, BoolLit)):
        return e.value
    if isinstance(e, EnumLit):
        return e
    if isinstance(e, EmptySeq):
        return ()
    if isinstance(e, App):
        if call is None:
            raise EvalError(f"no interpretation for {e.fn}")
        return call(e.fn, tuple(evaluate(a, values, call) for a in e.args))
    if isinstance(e, UnOp):
        v = evaluate(e.arg, values, call)
        return (not v) if e.op == "not" else -v
    if isinstance(e, BinOp):
        # short-circuit so that guards like b ∧ f(x) never force f needlessly
        if e.op in LOGIC_OPS:
            a = evaluate(e.left, values, call)
            if e.op == "and" and not a:
                return False
            if e.op == "or" and a:
                return True
            if e.op == "implies" and not a:
                return True
            return bool(evaluate(e.right, values, call))
        return apply_op(e.op, evaluate(e.left, values, call), evaluate(e.right, values, call))
    if isinstance(e, Forall):
        raise EvalError("quantified formulas are decided, not evaluated")
    raise EvalError(f"not an expression: {e!r}")


def value_to_expr(v: Any) -> Expr:
    """Literal for a runtime value, where one exists."""
    return _literal(v)


def show_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, EnumLit):
        return v.constructor
    if isinstance(v, tuple) and not isinstance(v, Token):
        return "⟨" + ", ".join(show_value(x) for x in v) + "⟩"
    return str(v)


def value_json(v: Any) -> Any:
    if isinstance(v, (bool, int)):
        return v
    if isinstance(v, EnumLit):
        return v.constructor
    if isinstance(v, Token):
        return str(v)
    if isinstance(v, tuple):
        return [value_json(x) for x in v]
    return str(v)


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------


def type_to_json(t: TypeExpr) -> Any:
    if isinstance(t, BoolT):
        return "bool"
    if isinstance(t, IntT):
        return "int"
    if isinstance(t, EnumT):
        return {"enum": t.name, "constructors": list(t.constructors)}
    if isinstance(t, SeqT):
        return {"seq": type_to_json(t.elem) if t.elem is not None else None}
    return {"abstract": t.name}


def type_from_json(d: Any) -> TypeExpr:
    if d == "bool":
        return BOOL
    if d == "int":
        return INT
    if "enum" in d:
        return EnumT(d["enum"], tuple(d["constructors"]))
    if "seq" in d:
        return SeqT(type_from_json(d["seq"]) if d["seq"] is not None else None)
    return AbstractT(d["abstract"])


def expr_to_json(e: Expr) -> Any:
    if isinstance(e, Var):
        return {"op": "var", "name": e.name, **({"ns": e.ns} if e.ns else {})}
    if isinstance(e, IntLit):
        return {"op": "int", "value": e.value}
    if isinstance(e, BoolLit):
        return {"op": "bool", "value": e.value}
    if isinstance(e, EnumLit):
        return {"op": "enum", "type": e.type, "constructor": e.constructor}
    if isinstance(e, EmptySeq):
        return {"op": "empty"}
    if isinstance(e, App):
        return {"op": "app", "fn": e.fn, "args": [expr_to_json(a) for a in e.args]}
    if isinstance(e, UnOp):
        return {"op": e.op, "args": [expr_to_json(e.arg)]}
    if isinstance(e, BinOp):
        return {"op": e.op, "args": [expr_to_json(e.left), expr_to_json(e.right)]}
    if isinstance(e, Forall):
        return {"op": "forall",
                "bound": [[n, type_to_json(t)] for n, t in e.bound],
                "args": [expr_to_json(e.body)]}
    raise TypeError(e)


def expr_from_json(d: Any) -> Expr:
    op = d["op"]
    if op == "var":
        return Var(d["name"], d.get("ns"))
    if op == "int":
        return IntLit(d["value"])
    if op == "bool":
        return BoolLit(d["value"])
    if op == "enum":
        return EnumLit(d["type"], d["constructor"])
    if op == "empty":
        return EmptySeq()
    if op == "app":
        return App(d["fn"], tuple(expr_from_json(a) for a in d["args"]))
    if op in ("not", "neg"):
        return UnOp(op, expr_from_json(d["args"][0]))
    if op == "forall":
        return Forall(tuple((n, type_from_json(t)) for n, t in d["bound"]),
                      expr_from_json(d["args"][0]))
    left, right = (expr_from_json(a) for a in d["args"])
    return BinOp(op, left, right)
