import pytest
from hypothesis import given, strategies as st

from rcverify.expr import (
    BOOL, FALSE, INT, TRUE, App, BinOp, EmptySeq, EnumLit, EnumT, IntLit, SeqT, Subst,
    TypeCheckError, TypeEnv, UnOp, Var, constant_fold, evaluate, expr_from_json,
    expr_to_json, free_vars, subst_apply, subst_compose, to_display, to_text, type_check,
    value_json,
)

COLOR = EnumT("Color", ("red", "green"))
ENV = TypeEnv(vars={"x": INT, "y": INT, "p": BOOL, "c": COLOR},
              funs={"f": ((INT,), INT)}, types={"Color": COLOR})


def int_exprs(depth=3):
    leaf = st.one_of(st.sampled_from([Var("x"), Var("y")]), st.integers(-3, 3).map(IntLit))
    if depth == 0:
        return leaf
    sub = int_exprs(depth - 1)
    return st.one_of(
        leaf,
        st.builds(BinOp, st.sampled_from(["add", "sub", "mul"]), sub, sub),
        st.builds(lambda a: UnOp("neg", a), sub),
        st.builds(lambda a: App("f", (a,)), sub),
    )


def bool_exprs(depth=3):
    leaf = st.one_of(st.sampled_from([Var("p"), TRUE, FALSE]),
                     st.builds(BinOp, st.sampled_from(["lt", "le", "eq", "ne", "gt", "ge"]),
                               int_exprs(1), int_exprs(1)),
                     st.sampled_from([BinOp("eq", Var("c"), EnumLit("Color", "red"))]))
    if depth == 0:
        return leaf
    sub = bool_exprs(depth - 1)
    return st.one_of(leaf, st.builds(lambda a: UnOp("not", a), sub),
                     st.builds(BinOp, st.sampled_from(["and", "or", "implies"]), sub, sub))


states = st.fixed_dictionaries({
    "x": st.integers(-4, 4), "y": st.integers(-4, 4), "p": st.booleans(),
    "c": st.sampled_from([EnumLit("Color", "red"), EnumLit("Color", "green")]),
})


def table(fn, args):
    assert fn == "f"
    return args[0] * 2 - 1


def ev(e, s):
    return evaluate(e, s, table)


@given(bool_exprs(), states)
def test_folding_preserves_meaning(e, s):
    assert ev(constant_fold(e), s) == ev(e, s)


@given(int_exprs(), states)
def test_folding_preserves_integer_meaning(e, s):
    assert ev(constant_fold(e), s) == ev(e, s)


@given(bool_exprs(), int_exprs(), int_exprs(), states)
def test_substitution_lemma(e, ex, ey, s):
    sigma = Subst.of({"x": ex, "y": ey})
    shifted = {**s, "x": ev(ex, s), "y": ev(ey, s)}
    assert ev(subst_apply(sigma, e), s) == ev(e, shifted)


@given(int_exprs(2), int_exprs(2), bool_exprs(2), states)
def test_composition_is_sequential(a, b, e, s):
    rho = Subst.of({"x": a})
    sigma = Subst.of({"y": b, "x": a})
    # run the update σ and then the update ρ on a concrete state
    s1 = {**s, **{k: ev(v, s) for k, v in sigma.entries}}
    s2 = {**s1, **{k: ev(v, s1) for k, v in rho.entries}}
    assert ev(subst_apply(subst_compose(rho, sigma), e), s) == ev(e, s2)


@given(bool_exprs())
def test_json_round_trip(e):
    assert expr_from_json(expr_to_json(e)) == e


@given(bool_exprs())
def test_text_round_trip(e):
    from rcverify.parser import parse_expr
    assert parse_expr(to_text(e), ENV) == e


def test_type_errors():
    with pytest.raises(TypeCheckError):
        type_check(ENV, BinOp("add", Var("x"), Var("p")))
    with pytest.raises(TypeCheckError):
        type_check(ENV, Var("nope"))
    with pytest.raises(TypeCheckError):
        type_check(ENV, BinOp("eq", Var("c"), IntLit(1)))
    assert type_check(ENV, BinOp("eq", EmptySeq(), EmptySeq())) == BOOL


def test_fold_examples():
    assert constant_fold(BinOp("add", IntLit(2), BinOp("mul", IntLit(3), IntLit(2)))) == IntLit(8)
    assert constant_fold(BinOp("and", TRUE, Var("p"))) == Var("p")
    assert constant_fold(BinOp("or", Var("p"), TRUE)) == TRUE
    assert constant_fold(UnOp("not", UnOp("not", Var("p")))) == Var("p")


def test_display_and_values():
    e = BinOp("implies", Var("p"), UnOp("not", BinOp("lt", Var("x"), IntLit(1))))
    assert to_display(e) == "p ⇒ ¬x < 1"
    assert free_vars(e) == {"p", "x"}
    assert value_json(EnumLit("Color", "red")) == "red"
    assert SeqT(INT) != SeqT(BOOL)
