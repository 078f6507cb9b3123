"""Recursive-descent parser for ``.rcsm`` machine files.

Grammar (keywords in quotes)::

    file       := typedecl* 'statemachine' ID
                  'vars' NameDecl* ['consts' ConstDecl*] 'events' NameDecl*
                  'states' NodeDecl* 'initial' ID 'finals' ID*
                  'transitions' TransDecl*
    typedecl   := 'enum' ID '=' ID ('|' ID)* | 'abstract' ID
                | 'function' ID '(' [Type (',' Type)*] ')' ':' Type
    NodeDecl   := ID ['entry' Action] ['exit' Action]
    TransDecl  := ID 'from' ID 'to' ID ['trigger' Event] ['condition' Expr] ['action' Action]
    Action     := Atom (';' Atom)*
    Atom       := 'skip' | ID ':=' Expr | Event | 'if' Expr 'then' Action 'else' Action 'end'
    Event      := ID | ID '?' ID | ID '!' Expr

Comments run from ``--`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expr import (
    BOOL, INT, AbstractT, App, BinOp, BoolLit, EmptySeq, EnumLit, EnumT, Expr,
    IntLit, SeqT, TypeEnv, TypeExpr, UnOp, Var, is_literal, type_check,
    compatible, TypeCheckError,
)
from .machine import (
    RESERVED_VAR, ActionSyn, AssignAct, EventAct, EventSyn, IfAct, Input,
    NodeDecl, Output, SeqAct, Simple, SKIP, StMach, TransDecl,
    check_action, check_machine_types,
)

KEYWORDS = {
    "statemachine", "vars", "consts", "events", "states", "initial", "finals",
    "transitions", "entry", "exit", "from", "to", "trigger", "condition",
    "action", "skip", "if", "then", "else", "end", "true", "false", "and",
    "or", "not", "enum", "abstract", "function",
}

_UNICODE = {"∧": "and", "∨": "or", "¬": "not", "⇒": "=>", "≠": "!=",
            "≤": "<=", "≥": ">=", "×": "*", "⟨⟩": "<>"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|--[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|=>|==|!=|<=|>=|<>|⟨⟩|[()\[\],:;?!=<>+\-*|∧∨¬⇒≠≤≥×])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Tok:
    kind: str  # "int" | "id" | "kw" | "sym" | "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "id":
            toks.append(Tok("kw" if value in KEYWORDS else "id", value, line, col))
        elif kind == "sym":
            value = _UNICODE.get(value, value)
            toks.append(Tok("kw" if value in KEYWORDS else "sym", value, line, col))
        elif kind == "int":
            toks.append(Tok("int", value, line, col))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


_CMP = {"=": "eq", "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.types: dict[str, TypeExpr] = {}
        self.ctor_owner: dict[str, str] = {}
        self.funs: dict[str, tuple[tuple[TypeExpr, ...], TypeExpr]] = {}
        self.vars: dict[str, TypeExpr] = {}
        self.consts: dict[str, TypeExpr] = {}
        self.const_values: dict[str, Expr] = {}
        self.events: dict[str, TypeExpr | None] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("kw", "sym") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "id":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found '{found}'")
        name = self.tok.text
        self.i += 1
        return name

    # -- declarations ------------------------------------------------------

    def _declare(self, name: str, tok: Tok) -> None:
        if name == RESERVED_VAR:
            raise self.error("actv is reserved for the machine control state", tok)
        taken = (self.types, self.ctor_owner, self.funs, self.vars, self.consts, self.events)
        if any(name in table for table in taken):
            raise self.error(f"duplicate declaration of {name}", tok)

    def parse_type(self) -> TypeExpr:
        tok = self.tok
        name = self.ident("type")
        if name == "int":
            return INT
        if name == "bool":
            return BOOL
        if name == "Seq":
            self.expect("(")
            elem = self.parse_type()
            self.expect(")")
            return SeqT(elem)
        if name not in self.types:
            raise self.error(f"unknown type {name}", tok)
        return self.types[name]

    def type_decls(self) -> None:
        while True:
            tok = self.tok
            if self.accept("enum"):
                name = self.ident("type name")
                self._declare(name, tok)
                self.expect("=")
                ctors = [self.ident("constructor")]
                while self.accept("|"):
                    ctors.append(self.ident("constructor"))
                for c in ctors:
                    self._declare(c, tok)
                    if ctors.count(c) > 1:
                        raise self.error(f"duplicate constructor {c}", tok)
                self.types[name] = EnumT(name, tuple(ctors))
                self.ctor_owner.update({c: name for c in ctors})
            elif self.accept("abstract"):
                name = self.ident("type name")
                self._declare(name, tok)
                self.types[name] = AbstractT(name)
            elif self.accept("function"):
                name = self.ident("function name")
                self._declare(name, tok)
                self.expect("(")
                params: list[TypeExpr] = []
                if not self.at(")"):
                    params.append(self.parse_type())
                    while self.accept(","):
                        params.append(self.parse_type())
                self.expect(")")
                self.expect(":")
                self.funs[name] = (tuple(params), self.parse_type())
            else:
                return

    def name_decls(self, table: dict, *, typed: bool, consts: bool = False) -> list[str]:
        order = []
        while self.tok.kind == "id":
            tok = self.tok
            name = self.ident()
            self._declare(name, tok)
            t = None
            if typed or self.at(":"):
                self.expect(":")
                t = self.parse_type()
            table[name] = t
            order.append(name)
            if consts and self.accept("="):
                lit_tok = self.tok
                value = self.expr()
                if not is_literal(value):
                    raise self.error("constant initialiser must be a literal", lit_tok)
                self.const_values[name] = value
        return order

    # -- machine -----------------------------------------------------------

    def machine(self) -> StMach:
        self.type_decls()
        self.expect("statemachine")
        name = self.ident("machine name")
        self.expect("vars")
        var_order = self.name_decls(self.vars, typed=True)
        const_order: list[str] = []
        if self.accept("consts"):
            const_order = self.name_decls(self.consts, typed=True, consts=True)
        self.expect("events")
        event_order = self.name_decls(self.events, typed=False)
        self.expect("states")
        nodes = []
        while self.tok.kind == "id":
            nname = self.ident()
            entry = self.action() if self.accept("entry") else SKIP
            exit_ = self.action() if self.accept("exit") else SKIP
            nodes.append(NodeDecl(nname, entry, exit_))
        self.expect("initial")
        init = self.ident("initial state")
        self.expect("finals")
        finals = []
        while self.tok.kind == "id":
            finals.append(self.ident())
        self.expect("transitions")
        transs = []
        while self.tok.kind == "id":
            transs.append(self.transition())
        if self.tok.kind != "eof":
            raise self.error(f"unexpected '{self.tok.text}'")
        try:
            env = TypeEnv(vars=self.vars, consts=self.consts, funs=self.funs,
                          events=self.events, types=self.types,
                          const_values=self.const_values)
        except TypeCheckError as exc:
            raise self.error(str(exc)) from None
        for c, v in self.const_values.items():
            if not compatible(type_check(env, v), self.consts[c]):
                raise TypeCheckError(f"initialiser of {c} does not have type {self.consts[c]}", v)
        m = StMach(name, env, init, tuple(finals), tuple(nodes), tuple(transs),
                   tuple(var_order), tuple(const_order), tuple(event_order))
        check_machine_types(m)
        return m

    def transition(self) -> TransDecl:
        tid = self.ident("transition name")
        self.expect("from")
        src = self.ident("source state")
        self.expect("to")
        tgt = self.ident("target state")
        trig = None
        cond: Expr = BoolLit(True)
        act: ActionSyn = SKIP
        if self.accept("trigger"):
            trig = self.event(self.ident("event"))
        if self.accept("condition"):
            cond = self.expr()
        if self.accept("action"):
            act = self.action()
        return TransDecl(tid, src, tgt, trig, cond, act)

    # -- actions -----------------------------------------------------------

    def action(self) -> ActionSyn:
        first = self.atom_action()
        if self.accept(";"):
            return SeqAct(first, self.action())
        return first

    def atom_action(self) -> ActionSyn:
        if self.accept("skip"):
            return SKIP
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.action()
            self.expect("else")
            orelse = self.action()
            self.expect("end")
            return IfAct(cond, then, orelse)
        name = self.ident("action")
        if self.accept(":="):
            return AssignAct(name, self.expr())
        return EventAct(self.event(name))

    def event(self, chan: str) -> EventSyn:
        if self.accept("?"):
            return Input(chan, self.ident("input variable"))
        if self.accept("!"):
            return Output(chan, self.unary())
        return Simple(chan)

    # -- expressions -------------------------------------------------------

    def expr(self) -> Expr:
        left = self.disjunction()
        if self.accept("=>"):
            return BinOp("implies", left, self.expr())
        return left

    def disjunction(self) -> Expr:
        left = self.conjunction()
        if self.accept("or"):
            return BinOp("or", left, self.disjunction())
        return left

    def conjunction(self) -> Expr:
        left = self.negation()
        if self.accept("and"):
            return BinOp("and", left, self.conjunction())
        return left

    def negation(self) -> Expr:
        if self.accept("not"):
            return UnOp("not", self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.sum()
        if self.tok.kind == "sym" and self.tok.text in _CMP:
            op = _CMP[self.tok.text]
            self.i += 1
            return BinOp(op, left, self.sum())
        return left

    def sum(self) -> Expr:
        out = self.product()
        while self.at("+") or self.at("-"):
            op = "add" if self.tok.text == "+" else "sub"
            self.i += 1
            out = BinOp(op, out, self.product())
        return out

    def product(self) -> Expr:
        out = self.unary()
        while self.accept("*"):
            out = BinOp("mul", out, self.unary())
        return out

    def unary(self) -> Expr:
        if self.accept("-"):
            if self.tok.kind == "int":
                value = int(self.tok.text)
                self.i += 1
                return IntLit(-value)
            return UnOp("neg", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return IntLit(int(tok.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.accept("<>"):
            return EmptySeq()
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        name = self.ident("expression")
        if self.accept("("):
            args: list[Expr] = []
            if not self.at(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
            self.expect(")")
            if name not in self.funs:
                raise self.error(f"unknown function {name}", tok)
            return App(name, tuple(args))
        if name in self.vars or name in self.consts:
            return Var(name)
        if name in self.ctor_owner:
            return EnumLit(self.ctor_owner[name], name)
        raise self.error(f"unknown identifier {name}", tok)


def parse(text: str) -> StMach:
    """Parse machine source text into the meta-model record (no well-formedness check)."""
    return Parser(text).machine()


def _bound_parser(text: str, env: TypeEnv) -> Parser:
    p = Parser(text)
    p.types = dict(env.types)
    p.ctor_owner = {c: t.name for t in env.types.values() if isinstance(t, EnumT)
                    for c in t.constructors}
    p.funs = dict(env.funs)
    p.vars = dict(env.vars)
    p.consts = dict(env.consts)
    p.events = dict(env.events)
    return p


def _finish(p: Parser, value):
    if p.tok.kind != "eof":
        raise p.error(f"unexpected '{p.tok.text}'")
    return value


def parse_expr(text: str, env: TypeEnv) -> Expr:
    """Parse a standalone expression over the names declared in ``env``."""
    p = _bound_parser(text, env)
    return _finish(p, p.expr())


def parse_action(text: str, env: TypeEnv) -> ActionSyn:
    """Parse and type-check a standalone action over ``env``."""
    p = _bound_parser(text, env)
    a = _finish(p, p.action())
    check_action(env, a)
    return a


def parse_file(path) -> StMach:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
