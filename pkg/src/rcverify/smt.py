"""SMT-LIB 2.6 scripts for obligations: assert the negation, ``unsat`` means valid."""

from __future__ import annotations

import re
from typing import TYPE_CHECKING

from .expr import (
    AbstractT, App, BinOp, BoolLit, BoolT, EmptySeq, EnumLit, EnumT, Expr,
    IntLit, IntT, SeqT, TypeExpr, UnOp, Var, type_check,
)

if TYPE_CHECKING:
    from .verifier import Obligation

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")
_RESERVED = {
    "and", "or", "not", "=>", "=", "distinct", "ite", "true", "false", "Int", "Bool",
    "forall", "exists", "let", "match", "par", "as", "_", "!", "assert", "check-sat",
    "declare-fun", "declare-const", "declare-sort", "declare-datatype", "declare-datatypes",
    "define-fun", "set-logic", "set-info", "set-option", "exit", "push", "pop",
    "NUMERAL", "DECIMAL", "STRING", "BINARY", "HEXADECIMAL", "div", "mod", "abs",
}

_OPS = {"and": "and", "or": "or", "implies": "=>", "eq": "=", "ne": "distinct",
        "lt": "<", "le": "<=", "gt": ">", "ge": ">=", "add": "+", "sub": "-", "mul": "*"}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def sort_name(t: TypeExpr) -> str:
    if isinstance(t, BoolT):
        return "Bool"
    if isinstance(t, IntT):
        return "Int"
    if isinstance(t, (EnumT, AbstractT)):
        return symbol(t.name)
    assert isinstance(t, SeqT) and t.elem is not None
    return symbol(f"Seq_{_flat(t.elem)}")


def _flat(t: TypeExpr) -> str:
    if isinstance(t, SeqT):
        return f"Seq_{_flat(t.elem)}"
    return str(t)


def _empty_name(t: TypeExpr) -> str:
    return symbol(f"empty_{_flat(t)}")


class _Writer:
    def __init__(self, ob: "Obligation"):
        self.env = ob.env
        self.bound = dict(ob.bound)
        self.seq_sorts: dict[str, SeqT] = {}

    def typ(self, e: Expr) -> TypeExpr:
        return type_check(self.env, e, self.bound)

    def note(self, t: TypeExpr) -> None:
        if isinstance(t, SeqT) and t.elem is not None:
            self.seq_sorts[sort_name(t)] = t
            self.note(t.elem)

    def term(self, e: Expr, hint: TypeExpr | None = None) -> str:
        if isinstance(e, Var):
            return symbol(e.name)
        if isinstance(e, BoolLit):
            return "true" if e.value else "false"
        if isinstance(e, IntLit):
            return str(e.value) if e.value >= 0 else f"(- {-e.value})"
        if isinstance(e, EnumLit):
            return symbol(e.constructor)
        if isinstance(e, EmptySeq):
            if not isinstance(hint, SeqT) or hint.elem is None:
                raise ValueError("cannot determine the sort of an empty sequence")
            self.note(hint)
            return _empty_name(hint)
        if isinstance(e, App):
            params, _ = self.env.funs[e.fn]
            args = " ".join(self.term(a, p) for a, p in zip(e.args, params))
            return f"({symbol(e.fn)} {args})"
        if isinstance(e, UnOp):
            op = "not" if e.op == "not" else "-"
            return f"({op} {self.term(e.arg)})"
        if isinstance(e, BinOp):
            lh = rh = None
            if e.op in ("eq", "ne"):
                lt, rt = self.typ(e.left), self.typ(e.right)
                lh = rh = lt if not (isinstance(lt, SeqT) and lt.elem is None) else rt
            return f"({_OPS[e.op]} {self.term(e.left, lh)} {self.term(e.right, rh)})"
        raise ValueError(f"cannot export {e!r}")


def emit_smt(ob: "Obligation") -> str:
    """Declarations for every sort and symbol in the environment, then ``(assert (not φ))``."""
    w = _Writer(ob)
    env = ob.env
    for t in list(env.vars.values()) + list(env.consts.values()) + [t for _, t in ob.bound]:
        w.note(t)
    for params, result in env.funs.values():
        for t in params + (result,):
            w.note(t)
    body = w.term(ob.body)

    lines = ["(set-info :smt-lib-version 2.6)", "(set-logic ALL)",
             f"; {ob.kind}({ob.node})"]
    for t in env.types.values():
        if isinstance(t, AbstractT):
            lines.append(f"(declare-sort {symbol(t.name)} 0)")
        elif isinstance(t, EnumT):
            ctors = " ".join(f"({symbol(c)})" for c in t.constructors)
            lines.append(f"(declare-datatype {symbol(t.name)} ({ctors}))")
    for name, t in sorted(w.seq_sorts.items()):
        lines.append(f"(declare-sort {name} 0)")
        lines.append(f"(declare-const {_empty_name(t)} {name})")
    for fn, (params, result) in env.funs.items():
        ps = " ".join(sort_name(p) for p in params)
        lines.append(f"(declare-fun {symbol(fn)} ({ps}) {sort_name(result)})")
    for name, t in ob.bound:
        lines.append(f"(declare-const {symbol(name)} {sort_name(t)})")
    lines.append(f"(assert (not {body}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def smt_filename(machine: str, ob: "Obligation") -> str:
    suffix = "_init" if ob.kind == "InitEstablishes" else ""
    return f"{machine}_{ob.node}{suffix}.smt2"


def check_syntax(script: str) -> None:
    """Balanced s-expressions whose heads are SMT-LIB commands; raises ``ValueError``."""
    commands = {"set-info", "set-logic", "declare-sort", "declare-datatype", "declare-fun",
                "declare-const", "assert", "check-sat", "exit"}
    tokens = re.findall(r"\|[^|]*\||;[^\n]*|\(|\)|[^\s()|;]+", script)
    depth = 0
    expect_head = False
    for tok in tokens:
        if tok.startswith(";"):
            continue
        if tok == "(":
            if depth == 0:
                expect_head = True
            depth += 1
        elif tok == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced ')'")
        else:
            if depth == 0:
                raise ValueError(f"stray token {tok} at top level")
            if expect_head:
                if tok not in commands:
                    raise ValueError(f"unknown command {tok}")
                expect_head = False
    if depth:
        raise ValueError("unbalanced '('")
