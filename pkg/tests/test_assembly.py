import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnlcoupling import (
    Arrangement,
    ConfigurationError,
    CouplingConfig,
    Mesh,
    Regime,
    Scheme,
    apply,
    assemble,
    assemble_direct,
    bilinear,
    classify,
    discrete_energy,
)
from qnlcoupling.assembly import nonlocal_bilinear

from oracles import nonlocal_row

NL0 = Arrangement.nonlocal_local(0.0)
LNL = Arrangement.local_nonlocal_local(-0.5, 0.5)
ALL = [NL0, LNL, Arrangement.pure_nonlocal(), Arrangement.pure_local()]
HAND_ROW = np.array([0.25, 0.6875, -2.15625, 1.25, -0.03125])


def labels(cfg):
    return [g.value[0] for g in classify(cfg)]


def test_classify_small_nonlocal_local():
    cfg = CouplingConfig.build(4, NL0, "constant", 1)
    x = cfg.mesh.domain_nodes
    reg = dict(zip(np.round(x, 12), classify(cfg)))
    assert reg[0.0] is Regime.NONLOCAL
    assert reg[0.25] is Regime.TRANSITIONAL
    assert reg[0.5] is Regime.LOCAL


def test_classify_pure_local():
    cfg = CouplingConfig.build(8, Arrangement.pure_local(), "constant", 2)
    assert set(classify(cfg)) == {Regime.LOCAL}


def test_classify_local_nonlocal_local():
    cfg = CouplingConfig.build(10, LNL, "constant", 2)  # delta = 0.2
    reg = dict(zip(np.round(cfg.mesh.domain_nodes, 12), classify(cfg)))
    assert reg[0.0] is Regime.NONLOCAL
    assert reg[0.6] is Regime.TRANSITIONAL
    assert reg[-0.7] is Regime.TRANSITIONAL
    assert reg[0.8] is Regime.LOCAL
    assert reg[-0.8] is Regime.LOCAL


def test_row_regimes_match_classification():
    for arr in ALL:
        cfg = CouplingConfig.build(16, arr, "inverse_abs", 3)
        assert list(assemble(cfg).regimes) == classify(cfg)[1:-1]


def test_ghost_layers():
    assert Arrangement.pure_nonlocal().ghost_counts(3) == (3, 3)
    assert NL0.ghost_counts(3) == (3, 0)
    assert LNL.ghost_counts(3, 16) == (0, 0)
    assert Arrangement.pure_local().ghost_counts(3) == (0, 0)


def test_close_interfaces_get_extension_nodes():
    # r = 5, h = 1/16: the l = 4 mirrored row reaches 9 cells left of x_a = -1/2
    assert LNL.ghost_counts(5, 16) == (1, 1)
    cfg = CouplingConfig.build(16, LNL, "constant", 5)
    assert (cfg.mesh.ghost_left, cfg.mesh.ghost_right) == (1, 1)


def test_off_grid_interface_is_named():
    with pytest.raises(ConfigurationError, match="0.013"):
        CouplingConfig.build(32, Arrangement.nonlocal_local(0.013), "constant", 2)


def test_interfaces_too_close_to_boundary():
    with pytest.raises(ConfigurationError):
        CouplingConfig.build(8, Arrangement.local_nonlocal_local(-0.875, 0.5), "constant", 2)


def test_horizon_mismatch_rejected():
    from qnlcoupling import constant_kernel

    mesh = Mesh(8, ghost_left=2)
    with pytest.raises(ConfigurationError):
        CouplingConfig(mesh, NL0, constant_kernel(0.3), 2)


def test_nonlocal_row_constant_r2():
    cfg = CouplingConfig.build(8, NL0, "constant", 2)
    a = assemble(cfg)
    h2 = cfg.h**2
    np.testing.assert_allclose(-a.stencils[3] * h2, [0.21875, 0.125, -0.6875, 0.125, 0.21875], rtol=1e-14)


def test_transitional_hand_row():
    cfg = CouplingConfig.build(8, NL0, "constant", 2)
    a = assemble(cfg)
    row = a.regimes.index(Regime.TRANSITIONAL)
    got = -a.stencils[row] * cfg.h**2
    assert np.max(np.abs(got - HAND_ROW)) <= 1e-12


def test_transitional_row_at_full_horizon_is_local(kernel_kind):
    cfg = CouplingConfig.build(8, NL0, kernel_kind, 2)
    a = assemble(cfg)
    rows = [k for k, g in enumerate(a.regimes) if g is Regime.TRANSITIONAL]
    got = -a.stencils[rows[-1]] * cfg.h**2
    np.testing.assert_allclose(got, [0.0, 1.0, -2.0, 1.0, 0.0], atol=1e-14)


def test_hand_row_on_quadratic():
    # forward-difference convection shifts the value by 0.5625 from 2 a(h) = 2.25
    h = 0.1
    offsets = np.arange(-2, 3)
    xi = 0.3
    val = float(HAND_ROW @ (xi + offsets * h) ** 2) / h**2
    assert val == pytest.approx(2.8125, abs=1e-12)


def test_mirrored_transitional_row():
    # a right-hand interface reverses the hand row
    cfg = CouplingConfig.build(8, LNL, "constant", 2)
    a = assemble(cfg)
    labs = labels(cfg)[1:-1]
    k = labs.index("n") - 1  # left transitional node adjacent to x_a
    got = -a.stencils[k] * cfg.h**2
    np.testing.assert_allclose(got, HAND_ROW[::-1], atol=1e-12)


def test_local_rows():
    cfg = CouplingConfig.build(8, Arrangement.pure_local(), "constant", 2)
    a = assemble(cfg)
    assert a.half_band == 1
    np.testing.assert_allclose(a.stencils * cfg.h**2, np.tile([-1, 2, -1], (a.n, 1)), rtol=1e-14)


@pytest.mark.parametrize("arr", ALL, ids=lambda a: a.kind.value)
@pytest.mark.parametrize("scheme", list(Scheme))
def test_row_sums_vanish(arr, scheme, kernel_kind):
    cfg = CouplingConfig.build(16, arr, kernel_kind, 3, scheme)
    s = assemble(cfg).stencils
    assert np.all(np.abs(s.sum(axis=1)) <= 1e-12 * np.abs(s).sum(axis=1))


@pytest.mark.parametrize("arr", ALL, ids=lambda a: a.kind.value)
@pytest.mark.parametrize("r", [1, 2, 3, 5])
def test_patch_test(arr, r, kernel_kind):
    cfg = CouplingConfig.build(16, arr, kernel_kind, r)
    a = assemble(cfg)
    u = 3.0 * cfg.mesh.nodes + 7.0
    assert np.max(np.abs(apply(a, u))) <= 1e-11 * a.norm_inf() * np.max(np.abs(u))


def test_literal_index_breaks_patch_test():
    cfg = CouplingConfig.build(16, NL0, "constant", 3, literal_index=True)
    a = assemble(cfg)
    u = cfg.mesh.nodes.copy()
    assert np.max(np.abs(apply(a, u))) > 1e-3


@pytest.mark.parametrize("arr", [NL0, Arrangement.pure_nonlocal()], ids=["nonlocal_local", "pure_nonlocal"])
def test_nonlocal_rows_match_brute_force(arr, kernel_kind):
    cfg = CouplingConfig.build(8, arr, kernel_kind, 2)
    a = assemble(cfg)
    full = -a.full()
    mesh = cfg.mesh
    checked = 0
    for k, g in enumerate(a.regimes):
        if g is not Regime.NONLOCAL:
            continue
        ref = nonlocal_row(mesh.size, mesh.offset + k + 1, cfg.kernel, cfg.h, cfg.ratio)
        assert np.max(np.abs(full[k] - ref)) <= 1e-10 * np.max(np.abs(ref))
        checked += 1
    assert checked >= 7


def test_quadratic_consistency_nonlocal_rows(kernel_kind):
    cfg = CouplingConfig.build(16, NL0, kernel_kind, 3)
    a = assemble(cfg)
    vals = -apply(a, cfg.mesh.nodes**2)
    sel = np.array([g is Regime.NONLOCAL for g in a.regimes])
    np.testing.assert_allclose(vals[sel], 2.0, rtol=1e-12)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_transitional_quadratic_deviation_is_forward_difference_shift(kernel_kind, r):
    from qnlcoupling import WeightEvaluator, moment

    for n in (32, 64):
        cfg = CouplingConfig.build(n, NL0, kernel_kind, r)
        a = assemble(cfg)
        vals = -apply(a, cfg.mesh.nodes**2)
        w = WeightEvaluator(cfg.kernel)
        h, d = cfg.h, cfg.delta
        for k, g in enumerate(a.regimes):
            if g is not Regime.TRANSITIONAL:
                continue
            s = cfg.mesh.nodes[cfg.mesh.offset + k + 1]  # interface at 0
            shift = 2 * moment(cfg.kernel, 1, s, d) * h
            assert vals[k] - 2 * w.effective_diffusion(s) == pytest.approx(shift, abs=1e-9)


def test_direct_differs_only_on_transitional_rows(kernel_kind):
    cfg = CouplingConfig.build(16, LNL, kernel_kind, 3)
    c, d = assemble(cfg), assemble_direct(cfg)
    diff = np.any(c.stencils != d.stencils, axis=1)
    trans = np.array([g is Regime.TRANSITIONAL for g in c.regimes])
    assert not np.any(diff & ~trans)
    assert np.any(diff)


def test_direct_fails_patch_test():
    cfg = CouplingConfig.build(8, NL0, "constant", 2, Scheme.DIRECT)
    a = assemble(cfg)
    for F in (1.0, 4.0):
        res = apply(a, F * cfg.mesh.nodes)
        trans = [k for k, g in enumerate(a.regimes) if g is Regime.TRANSITIONAL]
        # the l = 1 row carries a residual proportional to the slope
        assert abs(res[trans[0]]) > 0.1 * F
    r1 = apply(a, cfg.mesh.nodes)[trans[0]]
    r4 = apply(a, 4 * cfg.mesh.nodes)[trans[0]]
    assert r4 == pytest.approx(4 * r1, rel=1e-12)


def test_direct_equals_compatible_without_transitional_rows():
    for arr in (Arrangement.pure_local(), Arrangement.pure_nonlocal()):
        cfg = CouplingConfig.build(8, arr, "inverse_abs", 2)
        np.testing.assert_array_equal(assemble(cfg).stencils, assemble_direct(cfg).stencils)


def test_stencil_leaving_grid_is_rejected():
    # r = 2N reaches past the right boundary from the nonlocal side
    with pytest.raises(ConfigurationError):
        assemble(CouplingConfig.build(2, Arrangement.nonlocal_local(0.5), "constant", 4))


def test_apply_shape_check():
    cfg = CouplingConfig.build(8, NL0, "constant", 2)
    with pytest.raises(ValueError):
        apply(assemble(cfg), np.zeros(3))


def test_apply_zero_and_constants(kernel_kind):
    cfg = CouplingConfig.build(8, LNL, kernel_kind, 2, Scheme.DIRECT)
    a = assemble(cfg)
    assert np.all(apply(a, cfg.mesh.zeros()) == 0)
    assert np.max(np.abs(apply(a, np.full(cfg.mesh.size, 5.0)))) <= 1e-10


# -- energy -------------------------------------------------------------------

def _smooth(mesh, coeffs):
    x = mesh.nodes
    return sum(c * np.sin((k + 1) * np.pi * (x + 1) / 2) for k, c in enumerate(coeffs))


def test_energy_of_constant_is_zero(kernel_kind):
    cfg = CouplingConfig.build(16, NL0, kernel_kind, 3)
    assert discrete_energy(cfg, np.full(cfg.mesh.size, 2.0)) == 0.0


def test_pure_local_energy_of_linear():
    cfg = CouplingConfig.build(10, Arrangement.pure_local(), "constant", 2)
    F = 1.7
    assert discrete_energy(cfg, F * cfg.mesh.nodes) == pytest.approx(F**2 * 2.0 / 2, rel=1e-13)


@given(
    a=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    b=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    arr=st.sampled_from([NL0, LNL]),
)
def test_bilinear_symmetry_and_energy(a, b, arr):
    cfg = CouplingConfig.build(16, arr, "constant", 3)
    u, v = _smooth(cfg.mesh, a), _smooth(cfg.mesh, b)
    assert bilinear(cfg, u, v) == bilinear(cfg, v, u)
    assert discrete_energy(cfg, u) == pytest.approx(0.5 * bilinear(cfg, u, u), rel=1e-12, abs=1e-14)
    assert bilinear(cfg, u, cfg.mesh.zeros()) == 0.0


@given(
    coeffs=st.lists(st.floats(-2, 2), min_size=4, max_size=4),
    kind=st.sampled_from(["constant", "inverse_abs"]),
    arr=st.sampled_from([NL0, LNL]),
    r=st.sampled_from([1, 2, 3, 5]),
)
def test_coupled_energy_dominates_nonlocal_energy(coeffs, kind, arr, r):
    cfg = CouplingConfig.build(32, arr, kind, r)
    u = _smooth(cfg.mesh, coeffs)
    b = bilinear(cfg, u, u)
    nl = nonlocal_bilinear(cfg, u, u)
    assert b >= nl - 1e-8 * max(1.0, abs(nl))


def test_bilinear_shape_check():
    cfg = CouplingConfig.build(8, NL0, "constant", 2)
    with pytest.raises(ValueError):
        bilinear(cfg, np.zeros(3), np.zeros(3))
