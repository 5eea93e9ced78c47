"""Shared test helpers: hypothesis strategies for constraint ASTs."""
from __future__ import annotations

from hypothesis import strategies as st

from oclaudit.ocl import ast as O

# Names that cannot collide with keywords, literals, or binders.
NAMES = ("a", "b", "v", "obj", "count", "items", "n0")
BINDERS = ("x", "y")

_names = st.sampled_from(NAMES)
_binders = st.sampled_from(BINDERS)

# Values whose canonical text reparses to the same literal: non-negative,
# plain decimal notation (negatives are spelled with unary minus).
_ints = st.integers(0, 2**31)
_reals = st.integers(0, 512).map(lambda n: n / 8.0)
_strings = st.text(alphabet="abcxyz_ 019", max_size=6)

_atoms = st.one_of(
    _ints.map(O.IntLit),
    _reals.map(O.RealLit),
    _strings.map(O.StrLit),
    st.booleans().map(O.BoolLit),
    st.just(O.SelfRef()),
    st.just(O.ResultRef()),
    _names.map(O.Ident),
)

_BIN_OPS = list(O.BinOp)
_PLAIN_COLL = [O.CollOp.SIZE, O.CollOp.IS_EMPTY, O.CollOp.NOT_EMPTY]


def _postfix(recv, arg):
    field = st.builds(O.FieldAccess, recv, _names)
    call = st.builds(
        O.Call,
        st.one_of(st.none(), recv),
        _names,
        st.lists(arg, max_size=2).map(tuple),
    )
    plain_coll = st.builds(
        O.CollectionOp, recv, st.sampled_from(_PLAIN_COLL),
        st.none(), st.just(()),
    )
    one_arg_coll = st.builds(
        O.CollectionOp, recv,
        st.sampled_from([O.CollOp.INCLUDES, O.CollOp.AT]),
        st.none(), st.tuples(arg),
    )
    quant = st.builds(
        O.CollectionOp, recv,
        st.sampled_from([O.CollOp.FOR_ALL, O.CollOp.EXISTS]),
        _binders, st.tuples(arg),
    )
    return st.one_of(field, call, plain_coll, one_arg_coll, quant)


def _compound(inner):
    binary = st.builds(O.Binary, st.sampled_from(_BIN_OPS), inner, inner)
    unary = st.builds(O.Unary, st.sampled_from(list(O.UnaryOp)), inner)
    return st.one_of(binary, unary, _postfix(inner, inner))


def expressions(include_atpre: bool = False):
    """Random well-formed expressions. With include_atpre, @pre markers are
    placed only on names, field accesses, and calls whose subtree carries
    no other marker, the same shapes the parser accepts."""
    base = st.recursive(_atoms, _compound, max_leaves=12)
    if not include_atpre:
        return base
    atpre_free_recv = st.one_of(_atoms, _postfix(_atoms, _atoms))
    wrappable = st.one_of(
        _names.map(O.Ident),
        st.builds(O.FieldAccess, atpre_free_recv, _names),
        st.builds(
            O.Call,
            st.one_of(st.none(), atpre_free_recv),
            _names,
            st.lists(st.recursive(_atoms, _compound, max_leaves=4), max_size=2).map(tuple),
        ),
    )
    marked = wrappable.map(O.AtPre)
    leaves = st.one_of(_atoms, marked)
    return st.recursive(leaves, _compound, max_leaves=12)
