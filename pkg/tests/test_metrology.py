import numpy as np
import pytest

from qfikit.derivs import d_rho_analytic, derivative_bundle, diag_gram, eigen_derivatives
from qfikit.errors import (
    DegenerateSpectrum,
    NegativeInformation,
    RankChangeDetected,
    SingularInformation,
)
from qfikit.metrology import (
    PATHS,
    QFIMResult,
    _clamp,
    crb,
    paths_agree,
    qfi,
    qfi_all_paths,
    qfi_support_sum,
    qfim,
    qfim_from_slds,
    sld,
    sld_residual,
)
from qfikit.sampling import random_family, random_hermitian, random_pure_family, random_unitary
from qfikit.states import LinearFamily, SpectralData, UnitaryFamily, spectral_support
from qfikit.xstate import xstate_family

from conftest import BELL_PARAMS, EXAMPLE_PARAMS, SZ


def _random_cases(seed, count):
    """(family, rank) pairs cycling through N in {2, 3, 4, 6} and every rank."""
    rng = np.random.default_rng(seed)
    shapes = [(n, r) for n in (2, 3, 4, 6) for r in range(1, n + 1)]
    for k in range(count):
        n, rank = shapes[k % len(shapes)]
        yield random_family(rng, n, rank, n_params=2), rank


# --- sld ---------------------------------------------------------------------


def test_sld_classical_family(classical_family):
    spec = spectral_support(classical_family.rho([0.0]))
    L = sld(spec, classical_family.d_rho_exact([0.0], 0))
    np.testing.assert_allclose(L.mat, SZ, atol=1e-15)
    assert L.support_rank == 2


def test_sld_invariant_state(invariant_family):
    spec = spectral_support(invariant_family.rho([0.2]))
    L = sld(spec, d_rho_analytic(invariant_family, [0.2], 0))
    assert np.all(L.mat == 0)


def test_sld_pure_bell(bell_family):
    rho = bell_family.rho([0.0])
    d = d_rho_analytic(bell_family, [0.0], 0)
    L = sld(spectral_support(rho), d)
    np.testing.assert_allclose(L.mat, 2 * d, atol=1e-14)
    assert sld_residual(rho, d, L) <= 1e-14


def test_sld_kernel_block_is_zero(rng):
    fam = random_family(rng, 5, rank=2)
    spec = spectral_support(fam.rho([0.4]))
    L = sld(spec, d_rho_analytic(fam, [0.4], 0))
    assert np.max(np.abs(spec.to_eigenbasis(L.mat)[2:, 2:])) <= 1e-15
    assert np.max(np.abs(L.mat - L.mat.conj().T)) == 0


def test_rank_change_detected():
    # rho = diag(1 - t, t): the zero eigenvalue leaves the kernel at t = 0
    fam = LinearFamily(np.diag([1.0, 0.0]), (np.diag([-1.0, 1.0]),))
    spec = spectral_support(fam.rho([0.0]))
    with pytest.raises(RankChangeDetected) as info:
        sld(spec, fam.d_rho_exact([0.0], 0))
    assert info.value.leak == pytest.approx(1.0)
    for path in PATHS:
        with pytest.raises(RankChangeDetected):
            qfi(fam, [0.0], 0, path)
    with pytest.raises(RankChangeDetected):
        qfim(fam, [0.0])


# --- qfi ---------------------------------------------------------------------


def test_bell_qfi_is_four(bell_family):
    for path, value in qfi_all_paths(bell_family, [0.0]).items():
        assert value == pytest.approx(4.0, abs=1e-8), path


def test_xstate_example_qfi(example_family):
    # 16 (0.04 / 0.6 + 0.0375 / 0.4)
    expected = 16 * (0.04 / 0.6 + 0.0375 / 0.4)
    assert expected == pytest.approx(2.5666667, abs=1e-7)
    for value in qfi_all_paths(example_family, [0.0]).values():
        assert value == pytest.approx(expected, abs=1e-10)


def test_invariant_qfi_is_zero(invariant_family):
    assert qfi_all_paths(invariant_family, [0.9]) == {p: 0.0 for p in PATHS}


def test_classical_family_at_origin(classical_family):
    # lambda_i + lambda_j = 1 everywhere, so F = 2 * (1/4 + 1/4) = 1
    assert qfi(classical_family, [0.0], 0, "sld_trace") == pytest.approx(1.0, abs=1e-15)
    assert qfi(classical_family, [0.0], 0, "matrix_element") == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DegenerateSpectrum):
        qfi(classical_family, [0.0], 0, "support_sum")


@pytest.mark.parametrize("t", [0.2, -0.5, 0.9])
def test_classical_family_is_classical(classical_family, t):
    expected = 1 / (1 - t**2)
    for value in qfi_all_paths(classical_family, [t]).values():
        assert value == pytest.approx(expected, rel=1e-12)
    res = qfim(classical_family, [t])
    assert res.classical_part[0, 0] == pytest.approx(expected, rel=1e-12)
    assert res.quantum_part[0, 0] == 0


def test_unknown_path(bell_family):
    with pytest.raises(ValueError, match="unknown"):
        qfi(bell_family, [0.0], 0, "bogus")


def test_clamping():
    assert _clamp(-5e-10) == 0.0
    with pytest.raises(NegativeInformation):
        _clamp(-1e-6)


def test_path_agreement_on_random_families():
    worst = 0.0
    for fam, rank in _random_cases(7, 200):
        theta = [0.3, -0.6]
        for m in range(2):
            values = qfi_all_paths(fam, theta, m)
            ok, gap = paths_agree(values)
            assert ok, (rank, values)
            worst = max(worst, gap / max(1.0, values["sld_trace"]))
    assert worst <= 1e-9


def test_sld_relation_on_random_families():
    for fam, _ in _random_cases(11, 60):
        theta = [0.1, 0.2]
        rho = fam.rho(theta)
        spec = spectral_support(rho)
        for m in range(2):
            d = d_rho_analytic(fam, theta, m)
            assert sld_residual(rho, d, sld(spec, d)) <= 1e-8


# --- qfim --------------------------------------------------------------------


def test_xstate_example_qfim():
    fam = xstate_family(EXAMPLE_PARAMS, ("alpha", "beta"))
    res = qfim(fam, [0.0, 0.0])
    np.testing.assert_allclose(
        res.matrix, [[2.5666667, -0.4333333], [-0.4333333, 2.5666667]], atol=1e-7
    )


def test_bell_qfim_is_singular():
    fam = xstate_family(BELL_PARAMS, ("alpha", "beta"))
    res = qfim(fam, [0.0, 0.0])
    np.testing.assert_allclose(res.matrix, [[4, 4], [4, 4]], atol=1e-8)
    with pytest.raises(SingularInformation) as info:
        crb(res)
    np.testing.assert_allclose(info.value.null_direction, np.array([1, -1]) / np.sqrt(2), atol=1e-6)


def test_invariant_qfim_is_zero():
    fam = UnitaryFamily(np.diag([0.7, 0.3]), (SZ, np.diag([2.0, 0.0])))
    np.testing.assert_array_equal(qfim(fam, [0.1, 0.2]).matrix, np.zeros((2, 2)))


def test_qfim_structure_on_random_families():
    for fam, _ in _random_cases(23, 60):
        theta = [0.25, -0.35]
        res = qfim(fam, theta)
        f = res.matrix
        assert np.max(np.abs(f - f.T)) <= 1e-9
        assert np.linalg.eigvalsh(0.5 * (f + f.T))[0] >= -1e-9
        assert np.array_equal(f, res.classical_part + res.quantum_part)
        for a in range(2):
            assert abs(f[a, a] - qfi(fam, theta, a)) <= 1e-9
        # literal anticommutator route on the SLDs
        rho = fam.rho(theta)
        spec = spectral_support(rho)
        slds = [sld(spec, d_rho_analytic(fam, theta, m)) for m in range(2)]
        literal, imag = qfim_from_slds(rho, slds, return_imag=True)
        assert imag <= 1e-10
        assert np.max(np.abs(literal - f)) <= 1e-8


def test_off_support_block_is_irrelevant(rng):
    for fam, rank in _random_cases(31, 40):
        if rank == fam.dim:
            continue
        theta = [0.5, 0.1]
        rho = fam.rho(theta)
        spec = spectral_support(rho)
        slds = [sld(spec, d_rho_analytic(fam, theta, m)).mat for m in range(2)]
        base = qfim_from_slds(rho, slds)
        k = spec.dim - spec.rank
        perturbed = []
        for L in slds:
            block = np.zeros((spec.dim, spec.dim), dtype=complex)
            block[spec.rank:, spec.rank:] = random_hermitian(rng, k, scale=5.0)
            perturbed.append(L + spec.from_eigenbasis(block))
        assert np.max(np.abs(qfim_from_slds(rho, perturbed) - base)) <= 1e-10


@pytest.mark.parametrize("commuting", [True, False])
def test_pure_state_formula(rng, commuting):
    for _ in range(10):
        n = int(rng.choice([2, 3, 4, 6]))
        fam, psi0 = random_pure_family(rng, n, 2, commuting=commuting)
        theta = rng.uniform(-1, 1, 2)
        psi = fam.unitary(theta) @ psi0
        if commuting:
            dpsi = [-1j * g @ psi for g in fam.generators]
        else:
            dpsi = []
            for a in range(2):
                shift = np.zeros(2)
                shift[a] = 1e-5
                up = fam.unitary(theta + shift) @ psi0
                down = fam.unitary(theta - shift) @ psi0
                dpsi.append((up - down) / 2e-5)
        oracle = np.array(
            [
                [
                    4 * np.real(np.vdot(dpsi[a], dpsi[b]) - np.vdot(dpsi[a], psi) * np.vdot(psi, dpsi[b]))
                    for b in range(2)
                ]
                for a in range(2)
            ]
        )
        assert np.max(np.abs(qfim(fam, theta).matrix - oracle)) <= 1e-8


def test_unitary_covariance(rng):
    for fam, _ in _random_cases(41, 30):
        v = random_unitary(rng, fam.dim)
        moved = UnitaryFamily(
            v @ fam.rho0 @ v.conj().T, tuple(v @ g @ v.conj().T for g in fam.generators)
        )
        theta = [0.4, 0.7]
        assert np.max(np.abs(qfim(moved, theta).matrix - qfim(fam, theta).matrix)) <= 1e-8
        assert abs(qfi(moved, theta, 1, "matrix_element") - qfi(fam, theta, 1, "matrix_element")) <= 1e-8


def test_gauge_invariance(rng):
    for fam, _ in _random_cases(53, 30):
        theta = [0.2, 0.3]
        b = derivative_bundle(fam, theta, [0])
        spec = b.spectrum
        phases = np.exp(2j * np.pi * rng.random(spec.dim))
        rotated = SpectralData(spec.values, spec.vectors * phases, spec.rank, spec.rank_tol)
        dl, ov = eigen_derivatives(rotated, b.d_rho[0])
        gram = np.array([diag_gram(ov, ov, i) for i in range(spec.dim)])
        before = qfi_support_sum(spec, b.d_lambda[0], b.overlaps[0], b.diag_grams[0, 0])
        after = qfi_support_sum(rotated, dl, ov, gram)
        assert abs(after - before) <= 1e-9


def test_masking_kernel_pairs_changes_nothing(rng):
    fam = random_family(rng, 6, rank=3)
    b = derivative_bundle(fam, [0.2])
    support = qfi_support_sum(b.spectrum, b.d_lambda[0], b.overlaps[0], b.diag_grams[0, 0])
    everything = qfi_support_sum(
        b.spectrum, b.d_lambda[0], b.overlaps[0], b.diag_grams[0, 0], rank=6
    )
    assert abs(support - everything) <= 1e-12


# --- crb ---------------------------------------------------------------------


def test_crb_scalar():
    assert crb(4.0) == 0.25
    assert crb(1.0) == 1.0
    with pytest.raises(SingularInformation):
        crb(0.0)


def test_crb_matrix():
    f = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(crb(f) @ f, np.eye(2), atol=1e-14)
    res = QFIMResult(f, f, np.zeros((2, 2)))
    np.testing.assert_allclose(crb(res), np.linalg.inv(f), atol=1e-14)
