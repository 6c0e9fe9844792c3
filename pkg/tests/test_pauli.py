"""Pauli algebra against brute-force dense oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtqite.pauli import DimensionMismatchError, ObservableSum, PauliString, SizeCapError

from conftest import dense_from_label, random_state_array

LETTERS = "IXYZ"


def all_labels(n):
    return ["".join(p) for p in itertools.product(LETTERS, repeat=n)]


def test_single_qubit_product_table():
    # XY = iZ and friends.
    x = PauliString.from_label("X")
    y = PauliString.from_label("Y")
    z = PauliString.from_label("Z")
    assert x.mul(y) == PauliString(1, 0, 1, 1)
    assert y.mul(x) == PauliString(1, 0, 1, 3)
    assert y.mul(z) == PauliString(1, 1, 0, 1)
    assert z.mul(x) == PauliString(1, 1, 1, 1)
    assert x.mul(x) == PauliString.identity(1)


def test_identity_is_neutral():
    ident = PauliString.identity(3)
    p = PauliString.from_label("XZY")
    assert p.mul(ident) == p
    assert ident.mul(p) == p


@pytest.mark.parametrize("n", [1, 2])
def test_exhaustive_products_match_dense(n):
    labels = all_labels(n)
    strings = {lbl: PauliString.from_label(lbl) for lbl in labels}
    denses = {lbl: dense_from_label(lbl) for lbl in labels}
    for a in labels:
        for b in labels:
            got = strings[a].mul(strings[b]).to_dense()
            want = denses[a] @ denses[b]
            assert np.array_equal(got, want), f"{a} * {b}"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutes_matches_dense_commutator(n):
    rng = np.random.default_rng(7 + n)
    labels = all_labels(n)
    if n == 3:
        labels = [labels[i] for i in rng.choice(len(labels), size=20, replace=False)]
    for a in labels:
        for b in labels:
            pa, pb = PauliString.from_label(a), PauliString.from_label(b)
            comm = dense_from_label(a) @ dense_from_label(b) - dense_from_label(
                b
            ) @ dense_from_label(a)
            assert pa.commutes(pb) == (np.linalg.norm(comm) == 0.0)


def test_zz_xx_parity_examples():
    zz = PauliString.from_label("ZZ")
    xx = PauliString.from_label("XX")
    assert zz.commutes(xx)
    assert not PauliString.from_label("Z").commutes(PauliString.from_label("X"))


def test_commutes_iff_products_equal():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        a = PauliString(n, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)))
        b = PauliString(n, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)))
        assert a.commutes(b) == (a.mul(b) == b.mul(a))


def test_size_mismatch_raises():
    with pytest.raises(DimensionMismatchError):
        PauliString.from_label("X").mul(PauliString.from_label("XX"))


def test_label_round_trip_and_str():
    p = PauliString.from_label("XIZY", phase_exp=2)
    assert p.label == "XIZY"
    assert str(p) == "-XIZY"
    assert p.support == (0, 2, 3)
    assert p.weight == 3


def test_dense_export_basics():
    z = PauliString.from_label("Z")
    assert np.array_equal(z.to_dense(), np.diag([1.0 + 0j, -1.0 + 0j]))
    with pytest.raises(SizeCapError):
        PauliString.identity(11).to_dense()


def test_hopping_block_dense():
    # (X0X1 + Y0Y1)/2 has ones exactly in the |01> <-> |10> block.
    obs = ObservableSum.from_label_terms([(0.5, "XX"), (0.5, "YY")])
    mat = obs.to_dense()
    want = np.zeros((4, 4), dtype=complex)
    want[1, 2] = want[2, 1] = 1.0
    assert np.allclose(mat, want, atol=1e-15)


def test_sum_canonicalization_dedup_prune():
    terms = [(0.5, "XI"), (0.5, "XI"), (1e-16, "ZZ"), (1.0, "IZ")]
    obs = ObservableSum.from_label_terms(terms)
    assert len(obs) == 2
    # Canonical order is ascending (z_mask, x_mask): XI (z=0) before IZ (z=2).
    labels = [s.label for _, s in obs.terms]
    assert labels == ["XI", "IZ"]
    assert np.allclose(obs.coeffs, [1.0, 1.0])


def test_phase_folding_into_coefficients():
    p = PauliString.from_label("XY", phase_exp=1)  # i * XY
    obs = ObservableSum.from_terms([(2.0, p)])
    (coeff, string), = obs.terms
    assert string.phase_exp == 0
    assert coeff == 2.0j
    assert not obs.is_hermitian()
    assert obs.is_antihermitian()


def test_square_involution_and_anticommuting_cross_terms():
    z = ObservableSum.from_label_terms([(1.0, "Z")])
    assert z.square().allclose(ObservableSum.identity(1))
    xz = ObservableSum.from_label_terms([(1.0, "X"), (1.0, "Z")])
    assert xz.square().allclose(ObservableSum.identity(1, 2.0))


def test_square_matches_dense(rng):
    labels = ["XIZ", "ZYI", "IXX", "YZY"]
    coeffs = rng.normal(size=4)
    obs = ObservableSum.from_label_terms(list(zip(coeffs, labels)))
    want = obs.to_dense() @ obs.to_dense()
    assert np.allclose(obs.square().to_dense(), want, atol=1e-12)


def test_adjoint_hermitian_fixed_point(rng):
    labels = ["XZ", "YI", "ZZ"]
    obs = ObservableSum.from_label_terms(list(zip(rng.normal(size=3), labels)))
    assert obs.adjoint().allclose(obs)
    assert obs.is_hermitian()
    anti = ObservableSum.from_terms(
        [(-1j, PauliString.from_label(lbl)) for lbl in labels]
    )
    assert anti.adjoint().allclose(-1.0 * anti)
    assert anti.is_antihermitian()


def test_real_part_product_identity(rng):
    # 2 Re<s t> equals <{s, t}> on random states.
    from mtqite.states import StateVector, expectation

    for _ in range(20):
        n = 3
        a = PauliString(n, int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        b = PauliString(n, int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        psi = StateVector(n, random_state_array(rng, n))
        sa = ObservableSum.from_terms([(1.0, a)])
        sb = ObservableSum.from_terms([(1.0, b)])
        anti = sa.anticommutator(sb)
        lhs = 2.0 * expectation(psi, ObservableSum.from_terms([(1.0, a.mul(b))])).real
        rhs = expectation(psi, anti).real
        assert abs(lhs - rhs) < 1e-12


def test_rendering_format():
    obs = ObservableSum.from_label_terms([(1.5, "XIZY")])
    assert str(obs) == "+1.5 * XIZY"


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=3),
    data=st.data(),
)
def test_product_phases_dense_property(n, data):
    dim_mask = (1 << n) - 1
    a = PauliString(
        n,
        data.draw(st.integers(0, dim_mask)),
        data.draw(st.integers(0, dim_mask)),
        data.draw(st.integers(0, 3)),
    )
    b = PauliString(
        n,
        data.draw(st.integers(0, dim_mask)),
        data.draw(st.integers(0, dim_mask)),
        data.draw(st.integers(0, 3)),
    )
    assert np.allclose(a.mul(b).to_dense(), a.to_dense() @ b.to_dense(), atol=0)


@settings(max_examples=60, deadline=None)
@given(
    x1=st.integers(0, 7), z1=st.integers(0, 7),
    x2=st.integers(0, 7), z2=st.integers(0, 7),
    x3=st.integers(0, 7), z3=st.integers(0, 7),
)
def test_product_associativity(x1, z1, x2, z2, x3, z3):
    a, b, c = (PauliString(3, x, z) for x, z in ((x1, z1), (x2, z2), (x3, z3)))
    assert a.mul(b).mul(c) == a.mul(b.mul(c))
