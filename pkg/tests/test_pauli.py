import pytest
from hypothesis import given, settings, strategies as st

from subsysqec.code import build_code
from subsysqec.pauli import (
    CapacityError,
    DimensionError,
    GeneratorSet,
    GridIndex,
    PauliOperator,
    commutes,
    in_span,
    min_weight_coset,
    multiply,
)

N = 9


def site(code, i, j, kind):
    return PauliOperator.from_sites(code.n, kind, [code.q(i, j)])


def test_grid_linearization_round_trips():
    for q in range(15):
        g = GridIndex.from_linear(q, 3)
        g.check(5, 3)
        assert g.linear(3) == q
    assert GridIndex(2, 1).linear(3) == 3
    with pytest.raises(IndexError):
        GridIndex(6, 1).check(5, 3)


def test_commutes_examples(c53):
    x1, z1 = site(c53, 1, 1, "X"), site(c53, 1, 1, "Z")
    z2 = site(c53, 1, 2, "Z")
    assert not commutes(x1, z1)
    assert commutes(x1, z2)
    sx1, sz1 = c53.x_stabilizers[0], c53.z_stabilizers[0]
    assert commutes(sx1, sz1)


def test_commutes_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutes(PauliOperator.identity(3), PauliOperator.identity(4))


def test_multiply_examples(c53):
    x = site(c53, 1, 1, "X")
    assert multiply(x, x).is_identity(ignore_sign=False)
    j = 2
    a = PauliOperator.from_sites(c53.n, "X", [c53.q(2, j), c53.q(3, j)])
    b = PauliOperator.from_sites(c53.n, "X", [c53.q(3, j), c53.q(4, j)])
    assert multiply(a, b) == PauliOperator.from_sites(c53.n, "X", [c53.q(2, j), c53.q(4, j)])
    assert multiply(c53.logical_z, c53.logical_z).is_identity(ignore_sign=False)


def test_multiply_refuses_imaginary_phase():
    with pytest.raises(ValueError):
        multiply(PauliOperator.from_string("X"), PauliOperator.from_string("Z"))


def test_sign_tracking():
    # XZ = -iY on each site, so two sites give (-i)^2 = -1
    a, b = PauliOperator.from_string("XX"), PauliOperator.from_string("ZZ")
    assert multiply(a, b) == PauliOperator.from_string("-YY")
    assert multiply(PauliOperator.from_string("XZ"), PauliOperator.from_string("ZX")) == \
        PauliOperator.from_string("YY")
    assert multiply(PauliOperator.from_string("-X"), PauliOperator.from_string("-X")).sign == 1


def test_in_span_examples(c53):
    s = c53.stabilizers
    sx = c53.x_stabilizers
    assert in_span(s, multiply(sx[0], sx[1]))
    assert not in_span(s, c53.logical_z)
    gauge_pair = PauliOperator.from_sites(c53.n, "X", [c53.q(2, 2), c53.q(4, 2)])
    assert in_span(c53.gauge, gauge_pair)


def test_in_span_sign_for_abelian_sets(c53):
    neg = PauliOperator(c53.n, c53.x_stabilizers[0].x, 0, True)
    assert in_span(c53.stabilizers, neg, ignore_sign=True)
    assert not in_span(c53.stabilizers, neg, ignore_sign=False)


def test_min_weight_coset_examples(c33, c53):
    sg33 = c33.stabilizers_and_gauge
    assert min_weight_coset(sg33, c33.logical_z, "Z") == 3
    sg53 = c53.stabilizers_and_gauge
    assert min_weight_coset(sg53, c53.logical_z, "Z") == 5
    assert min_weight_coset(sg53, c53.logical_x, "X") == 3
    empty = GeneratorSet([], n=c53.n)
    assert min_weight_coset(empty, c53.logical_z, "Z") == 5


def test_min_weight_coset_capacity(c53):
    with pytest.raises(CapacityError):
        min_weight_coset(c53.gauge, c53.logical_z, "any")


def test_min_weight_unrestricted_small(c33):
    assert min_weight_coset(c33.stabilizers_and_gauge, c33.logical_z, "any") == 3


paulis = st.builds(
    lambda x, z, neg: PauliOperator(N, x, z, neg),
    st.integers(0, (1 << N) - 1),
    st.integers(0, (1 << N) - 1),
    st.booleans(),
)


@given(paulis, paulis)
def test_commutes_symmetric(a, b):
    assert commutes(a, b) == commutes(b, a)


@given(paulis)
def test_square_is_identity(a):
    sq = multiply(a, a)
    assert sq.is_identity(ignore_sign=False)


@given(paulis, paulis, paulis)
def test_associative_on_commuting_triples(a, b, c):
    if not (commutes(a, b) and commutes(b, c) and commutes(a, c)):
        return
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@given(paulis, paulis)
def test_weight_subadditive(a, b):
    if commutes(a, b):
        assert multiply(a, b).weight <= a.weight + b.weight


_C53 = build_code(5, 3)


@settings(max_examples=60)
@given(st.lists(st.integers(0, len(_C53.gauge) - 1), max_size=8))
def test_random_gauge_products_in_span(picks):
    acc = PauliOperator.identity(_C53.n)
    for k in picks:
        g = _C53.gauge[k]
        acc = PauliOperator(acc.n, acc.x ^ g.x, acc.z ^ g.z)
    assert in_span(_C53.gauge, acc)


@settings(max_examples=60)
@given(st.lists(st.integers(0, len(_C53.stabilizers) - 1), max_size=8),
       st.lists(st.integers(0, len(_C53.stabilizers) - 1), max_size=8))
def test_span_is_linear(p1, p2):
    def prod(picks):
        x = z = 0
        for k in picks:
            x ^= _C53.stabilizers[k].x
            z ^= _C53.stabilizers[k].z
        return x, z

    x1, z1 = prod(p1)
    x2, z2 = prod(p2)
    combo = PauliOperator(_C53.n, x1 ^ x2, z1 ^ z2)
    assert in_span(_C53.stabilizers, combo)
    assert not in_span(_C53.stabilizers,
                       PauliOperator(_C53.n, combo.x, combo.z ^ _C53.logical_z.z))
