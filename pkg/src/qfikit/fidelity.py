"""Uhlmann fidelity and fidelity susceptibility.

The analytic susceptibility follows the second-order expansion of
``sqrt(sqrt(rho) rho(theta + d) sqrt(rho)) = rho + X d + Y d^2`` restricted to
the support of ``rho``; the numeric one differences the fidelity itself.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .derivs import (
    DEGENERACY_TOL,
    FD_STEP_FIRST,
    FD_STEP_SECOND,
    d2_rho,
    derivative_bundle,
    second_eigen_derivatives,
)
from .errors import NotApplicable, NotPositiveSemidefinite
from .hermlin import PSD_TOL, psd_sqrt
from .metrology import _clamp, check_rank_stable, qfi
from .states import RANK_TOL, density_matrix

FS_DELTA = 1e-3
EIG_FLOOR = 1e-14
INFIDELITY_FLOOR = 1e-15  # a few ulps of 1.0
SCALING_STEPS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


class StepSizeWarning(UserWarning):
    """Successive finite-difference estimates disagree; the step is badly sized."""


def _fidelity_with_root(root, sigma):
    inner = root @ sigma @ root
    mu = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    if mu[0] < -PSD_TOL:
        raise NotPositiveSemidefinite(f"sqrt(rho) sigma sqrt(rho) has eigenvalue {mu[0]:.3e}", mu[0])
    mu = np.where(mu < EIG_FLOOR, 0.0, mu)
    return float(np.clip(np.sum(np.sqrt(mu)), 0.0, 1.0))


def uhlmann_fidelity(rho, sigma):
    """``Tr sqrt(sqrt(rho) sigma sqrt(rho))``, clamped to ``[0, 1]``."""
    rho = density_matrix(rho, name="rho")
    sigma = density_matrix(sigma, name="sigma")
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return _fidelity_with_root(psd_sqrt(rho), sigma)


@dataclass(frozen=True, eq=False)
class ExpansionTerms:
    trX: float
    trY: float
    Y_diag: np.ndarray
    A_support: np.ndarray
    B_support: np.ndarray
    X_support: np.ndarray

    @property
    def fs_from_Y(self):
        return -2.0 * self.trY


def expansion_terms(
    family,
    theta,
    m=0,
    rank_tol=RANK_TOL,
    degeneracy_tol=DEGENERACY_TOL,
    fd_step_first=FD_STEP_FIRST,
    fd_step_second=FD_STEP_SECOND,
):
    """First- and second-order coefficients of the fidelity expansion in the support.

    All matrices are expressed in the eigenbasis of ``rho``. ``trY`` drops the
    ``sum d2 lambda_i`` term (the trace of ``rho`` is constant) and symmetrizes
    the double sum, while ``Y_diag`` keeps every term of the diagonal element.
    """
    b = derivative_bundle(family, theta, [m], rank_tol, degeneracy_tol, fd_step_first)
    spec = b.spectrum
    d1 = b.d_rho[0]
    check_rank_stable(spec, d1)
    d2 = d2_rho(family, theta, m, m, fd_step_second)

    rank = spec.rank
    lam = spec.support_values
    root = np.sqrt(lam)
    d1_eig = spec.to_eigenbasis(d1)[:rank, :rank]
    d2_eig = spec.to_eigenbasis(d2)[:rank, :rank]
    a_s = np.outer(root, root) * d1_eig
    b_s = np.outer(root, root) * d2_eig
    x_s = a_s / (lam[:, None] + lam[None, :])

    dl = b.d_lambda[0, :rank]
    gram = b.diag_grams[0, 0, :rank].real
    ov2 = np.abs(b.overlaps[0][:rank, :rank]) ** 2  # |<psi_i|d psi_k>|^2
    denom = lam[:, None] + lam[None, :]

    d2l = second_eigen_derivatives(spec, d1, d2)
    y_diag = (
        0.25 * d2l
        - dl**2 / (8 * lam)
        - 0.5 * lam * gram
        + np.sum(2 * lam[:, None] * lam[None, :] ** 2 / denom**2 * ov2, axis=1)
    )
    tr_y = (
        -float(np.sum(dl**2 / (8 * lam)))
        - 0.5 * float(np.sum(lam * gram))
        + float(np.sum(np.outer(lam, lam) / denom * ov2))
    )
    tr_x = 0.5 * float(np.sum(dl))
    return ExpansionTerms(tr_x, tr_y, y_diag, a_s, b_s, x_s)


def fs_analytic(family, theta, m=0, **kwargs):
    """Fidelity susceptibility ``-2 Tr Y`` from the support expansion."""
    return _clamp(expansion_terms(family, theta, m, **kwargs).fs_from_Y, "fidelity susceptibility")


def _fidelity_curve(family, theta, m, deltas):
    t = family._theta(theta)
    root = psd_sqrt(density_matrix(family.rho(t)))
    out = []
    for delta in deltas:
        shifted = t.copy()
        shifted[m] += delta
        out.append(_fidelity_with_root(root, density_matrix(family.rho(shifted))))
    return np.array(out)


def fidelity_step(family, theta, m=0, delta=FS_DELTA):
    """``f(rho(theta), rho(theta + delta e_m))``."""
    return float(_fidelity_curve(family, theta, m, (delta,))[0])


def fs_numeric(family, theta, m=0, delta=FS_DELTA):
    """Fidelity susceptibility by differencing the fidelity.

    With ``chi(d) = 2 (1 - f(theta, theta + d)) / d^2`` the result is the
    Richardson combination ``2 chi(d/2) - chi(d)``, which cancels the O(d) bias
    from the cubic term of the fidelity.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    infidelity = 1 - _fidelity_curve(family, theta, m, (delta, delta / 2))
    infidelity[infidelity < INFIDELITY_FLOOR] = 0.0
    chi_full = 2 * infidelity[0] / delta**2
    chi_half = 2 * infidelity[1] / (delta / 2) ** 2
    scale = max(abs(chi_full), abs(chi_half))
    if scale > 0 and abs(chi_full - chi_half) > 0.2 * scale:
        warnings.warn(
            f"fidelity susceptibility estimates {chi_full:.6g} (step {delta:g}) and "
            f"{chi_half:.6g} (step {delta / 2:g}) differ by more than 20%",
            StepSizeWarning,
            stacklevel=2,
        )
    return 2 * chi_half - chi_full


def first_order_scaling_check(family, theta, m=0, deltas=SCALING_STEPS):
    """Least-squares slope of ``log(1 - f)`` against ``log(delta)``.

    A slope near 2 means the first-order term of the fidelity vanishes.
    """
    deltas = np.asarray(deltas, dtype=float)
    infidelity = 1 - _fidelity_curve(family, theta, m, deltas)
    if np.any(infidelity < EIG_FLOOR):
        raise NotApplicable(
            f"infidelity {infidelity.min():.3e} is below {EIG_FLOOR:g}; the state barely moves"
        )
    slope, _ = np.polyfit(np.log(deltas), np.log(infidelity), 1)
    return float(slope)


@dataclass(frozen=True)
class FSReport:
    fs_analytic: float
    fs_numeric: float
    qfi_quarter: float
    max_pairwise_gap: float
    tolerance: float
    flagged: bool


def fs_report(
    family,
    theta,
    m=0,
    delta=FS_DELTA,
    rtol=1e-4,
    rank_tol=RANK_TOL,
    degeneracy_tol=DEGENERACY_TOL,
    fd_step_first=FD_STEP_FIRST,
    fd_step_second=FD_STEP_SECOND,
):
    """Susceptibility three ways (expansion, differenced fidelity, QFI / 4)."""
    analytic = fs_analytic(
        family, theta, m, rank_tol=rank_tol, degeneracy_tol=degeneracy_tol,
        fd_step_first=fd_step_first, fd_step_second=fd_step_second,
    )
    numeric = fs_numeric(family, theta, m, delta)
    quarter = qfi(family, theta, m, "support_sum", rank_tol, degeneracy_tol, fd_step_first) / 4
    vals = (analytic, numeric, quarter)
    gap = max(abs(x - y) for x in vals for y in vals)
    tol = rtol * max(1.0, max(abs(v) for v in vals))
    return FSReport(analytic, numeric, quarter, gap, tol, gap > tol)
