import json

import numpy as np
import pytest

from wignerchaos.grid_kernel import (
    GridSpec,
    Kernel,
    MemoryCapError,
    SplitKernel,
    adjoint,
    adjoint_split,
    bicontract,
    cell_indicator,
    constant_kernel,
    contract,
    inner,
    is_mirror_symmetric,
    is_symmetric,
    kernel_from_bytes,
    kernel_from_json,
    kernel_to_bytes,
    kernel_to_json,
    kernels_close,
    load_kernel,
    max_abs_diff,
    norm,
    save_kernel,
    slice_kernel,
    symmetrize,
    zero_kernel,
)

GRID = GridSpec(1.0, 3)


def rand(order, cells=3, seed=0, complex_=True):
    rng = np.random.default_rng(seed)
    shape = (cells,) * order
    data = rng.standard_normal(shape)
    if complex_:
        data = data + 1j * rng.standard_normal(shape)
    return Kernel(GridSpec(1.0, cells), order, data)


def test_grid_spec_cell_width():
    assert GridSpec(2.0, 4).cell_width == 0.5
    with pytest.raises(ValueError):
        GridSpec(0.0, 4)
    with pytest.raises(ValueError):
        GridSpec(1.0, 0)


def test_kernel_construction_and_immutability():
    f = rand(2)
    assert f.data.dtype == np.complex128
    assert f.data.shape == (3, 3)
    with pytest.raises(ValueError):
        f.data[0, 0] = 1.0
    with pytest.raises(AttributeError):
        f.order = 5


def test_kernel_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        Kernel(GRID, 2, np.zeros((3, 4)))
    with pytest.raises(ValueError):
        Kernel(GRID, 1, np.array([1.0, np.inf, 0.0]))
    with pytest.raises(ValueError):
        Kernel(GRID, 1, np.array([1.0, np.nan, 0.0]))
    # flat input of the right total size reshapes
    f = Kernel(GRID, 2, np.arange(9.0))
    assert f.data[2, 2] == 8.0


def test_order_zero_kernel_is_scalar():
    c = constant_kernel(GRID, 2.5 + 1j)
    assert c.order == 0
    assert complex(c.data) == 2.5 + 1j
    assert inner(c, c) == pytest.approx(abs(2.5 + 1j) ** 2)


def test_arithmetic():
    f, g = rand(2, seed=1), rand(2, seed=2)
    assert np.allclose((f + g).data, f.data + g.data)
    assert np.allclose((f - g).data, f.data - g.data)
    assert np.allclose((2.0 * f).data, 2.0 * f.data)
    assert np.allclose((f * 2.0).data, 2.0 * f.data)
    assert np.allclose((f / 2.0).data, f.data / 2.0)
    assert np.allclose((-f).data, -f.data)
    with pytest.raises(ValueError):
        f + rand(3, seed=3)
    with pytest.raises(ValueError):
        f + rand(2, cells=4, seed=3)


def test_memory_cap():
    big = GridSpec(1.0, 2 ** 9)
    with pytest.raises(MemoryCapError):
        zero_kernel(big, 3)  # 2^27 entries
    # the cap error is a ValueError so callers can catch broadly
    assert issubclass(MemoryCapError, ValueError)


def test_adjoint_is_involution_and_reverses():
    f = rand(3, seed=4)
    assert kernels_close(adjoint(adjoint(f)), f)
    # f*(t1,t2,t3) = conj(f(t3,t2,t1))
    expected = np.conj(np.transpose(f.data, (2, 1, 0)))
    assert np.array_equal(adjoint(f).data, expected)


def test_mirror_symmetric_iff_self_adjoint():
    f = rand(3, seed=5)
    assert not is_mirror_symmetric(f)
    sym = 0.5 * (f + adjoint(f))
    assert is_mirror_symmetric(sym)
    assert kernels_close(adjoint(sym), sym)


def test_is_symmetric_and_symmetrize():
    f = rand(3, seed=6, complex_=False)
    assert not is_symmetric(f)
    s = symmetrize(f)
    assert is_symmetric(s)
    # symmetrize is a projection
    assert kernels_close(symmetrize(s), s)
    # average over all 6 permutations, spot-checked entrywise
    d = f.data
    manual = sum(
        np.transpose(d, p)
        for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    ) / 6.0
    assert np.allclose(s.data, manual)


def test_symmetrize_warns_on_complex_and_rejects_high_order():
    f = rand(2, seed=7)
    with pytest.warns(UserWarning):
        s = symmetrize(f)
    assert np.all(s.data.imag == 0)
    with pytest.raises(ValueError):
        symmetrize(rand(9, cells=2, seed=8))


def test_symmetric_implies_mirror_symmetric_for_real():
    f = symmetrize(rand(4, seed=9, complex_=False))
    assert is_symmetric(f)
    assert is_mirror_symmetric(f)


def test_inner_norm_scaling():
    # inner includes the cell volume h^n
    e = cell_indicator(GRID, 1)
    assert inner(e, e) == pytest.approx(GRID.cell_width)
    u = cell_indicator(GRID, 1, normalized=True)
    assert norm(u) == pytest.approx(1.0)
    f, g = rand(2, seed=10), rand(2, seed=11)
    assert inner(f, g) == pytest.approx(np.conj(inner(g, f)))


def test_contract_zero_is_tensor_product():
    f, g = rand(1, seed=12), rand(2, seed=13)
    out = contract(f, g, 0)
    assert out.order == 3
    assert np.allclose(out.data, np.multiply.outer(f.data, g.data))


def test_contract_full_is_nested_pairing():
    # p = n = m: pairs f's last var with g's first, inward:
    # <f contract_n g> = h^n sum f(t1..tn) g(tn..t1)
    f, g = rand(3, seed=14), rand(3, seed=15)
    out = contract(f, g, 3)
    assert out.order == 0
    expected = GRID.cell_width ** 3 * np.einsum(
        "abc,cba->", f.data, g.data
    )
    assert complex(out.data) == pytest.approx(expected)


def test_contract_one_matches_matrix_product():
    f, g = rand(2, seed=16), rand(2, seed=17)
    out = contract(f, g, 1)
    assert np.allclose(out.data, GRID.cell_width * f.data @ g.data)


def test_contract_validation():
    f, g = rand(2, seed=18), rand(3, seed=19)
    with pytest.raises(ValueError):
        contract(f, g, 3)
    with pytest.raises(ValueError):
        contract(f, g, -1)


def test_bicontract_separable_factorization():
    # (a (x) b) bicontract_{p,r} (c (x) d) = (a contract_p c) (x) (d contract_r b)
    rng = np.random.default_rng(20)
    for trial in range(100):
        n1, m1, n2, m2 = rng.integers(1, 3, size=4)
        a, b, c, d = (rand(int(o), seed=100 + 4 * trial + i)
                      for i, o in enumerate((n1, m1, n2, m2)))
        f = SplitKernel(contract(a, b, 0), (int(n1), int(m1)))
        g = SplitKernel(contract(c, d, 0), (int(n2), int(m2)))
        for p in range(int(min(n1, n2)) + 1):
            for r in range(int(min(m1, m2)) + 1):
                got = bicontract(f, g, p, r)
                assert got.split == (int(n1 + n2) - 2 * p, int(m1 + m2) - 2 * r)
                left = contract(a, c, p)
                right = contract(d, b, r)
                want = contract(left, right, 0)
                assert kernels_close(got.kernel, want), (trial, p, r)


def test_bicontract_zero_zero_keeps_blocks():
    f = SplitKernel(rand(2, seed=21), (1, 1))
    g = SplitKernel(rand(2, seed=22), (1, 1))
    out = bicontract(f, g, 0, 0)
    # output variable order: f first leg, g first leg, g second leg, f second leg
    expected = np.einsum("ad,bc->abcd", f.kernel.data, g.kernel.data)
    assert np.allclose(out.kernel.data, expected)


def test_adjoint_split_reverses_within_blocks():
    w = SplitKernel(rand(3, seed=23), (2, 1))
    ws = adjoint_split(w)
    assert ws.split == (2, 1)
    expected = np.conj(np.transpose(w.kernel.data, (1, 0, 2)))
    assert np.array_equal(ws.kernel.data, expected)
    assert kernels_close(adjoint_split(ws).kernel, w.kernel)


def test_slice_kernel():
    f = rand(3, seed=24)
    w = slice_kernel(f, 2, 1)
    assert w.split == (1, 1)
    assert np.array_equal(w.kernel.data, f.data[:, 1, :])
    assert slice_kernel(f, 1, 0).split == (0, 2)
    assert slice_kernel(f, 3, 2).split == (2, 0)
    with pytest.raises(ValueError):
        slice_kernel(f, 0, 1)
    with pytest.raises(ValueError):
        slice_kernel(f, 4, 1)
    with pytest.raises(ValueError):
        slice_kernel(f, 1, 3)


def test_max_abs_diff_and_close():
    f = rand(2, seed=25)
    assert max_abs_diff(f, f) == 0.0
    assert kernels_close(f, f)
    h = f + 1e-3 * rand(2, seed=26)
    assert not kernels_close(f, h)
    assert max_abs_diff(f, h) == pytest.approx(1e-3 * np.abs(rand(2, seed=26).data).max())


def test_binary_roundtrip_bit_exact():
    f = rand(4, seed=27)
    buf = kernel_to_bytes(f)
    g = kernel_from_bytes(buf)
    assert g.order == f.order
    assert g.grid == f.grid
    assert np.array_equal(g.data, f.data)
    # bit-exact: serializing again yields identical bytes
    assert kernel_to_bytes(g) == buf


def test_binary_rejects_corrupt_input():
    buf = kernel_to_bytes(rand(2, seed=28))
    with pytest.raises(ValueError):
        kernel_from_bytes(b"XXXX" + buf[4:])
    with pytest.raises(ValueError):
        kernel_from_bytes(buf[:-8])


def test_file_roundtrip(tmp_path):
    f = rand(3, seed=29)
    path = tmp_path / "k.wgk"
    save_kernel(f, path)
    g = load_kernel(path)
    assert np.array_equal(g.data, f.data)


def test_json_roundtrip():
    f = rand(2, seed=30)
    doc = json.loads(json.dumps(kernel_to_json(f)))
    g = kernel_from_json(doc)
    assert g.grid == f.grid
    assert np.array_equal(g.data, f.data)
