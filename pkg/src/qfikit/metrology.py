"""Symmetric logarithmic derivatives, quantum Fisher information and its matrix."""

from dataclasses import dataclass

import numpy as np

from .derivs import (
    DEGENERACY_TOL,
    FD_STEP_FIRST,
    d_rho_analytic,
    derivative_bundle,
)
from .errors import NegativeInformation, RankChangeDetected, SingularInformation
from .hermlin import anticommutator, as_hermitian
from .states import RANK_TOL, spectral_support

PATHS = ("support_sum", "sld_trace", "matrix_element")
RANK_LEAK_TOL = 1e-8
NEGATIVE_TOL = 1e-9


def check_rank_stable(spec, d_rho, tol=RANK_LEAK_TOL):
    """Raise if ``d rho`` has a component inside the kernel of ``rho``.

    Such a component means an eigenvalue is leaving zero, so the rank changes
    at this point and the support formulas do not apply.
    """
    k = spec.vectors[:, spec.rank:]
    if k.shape[1] == 0:
        return 0.0
    leak = float(np.max(np.abs(k.conj().T @ d_rho @ k)))
    if leak > tol:
        raise RankChangeDetected(
            f"d rho has a kernel block of size {leak:.3e} > {tol:g}; the rank of rho changes here",
            leak,
        )
    return leak


def _clamp(value, what="QFI"):
    if value < -NEGATIVE_TOL:
        raise NegativeInformation(f"{what} evaluated to {value:.3e} < 0")
    return max(float(value), 0.0)


def _pair_mask(spec):
    n, rank = spec.dim, spec.rank
    mask = np.zeros((n, n), dtype=bool)
    mask[:rank, :] = True
    mask[:, :rank] = True
    return mask


@dataclass(frozen=True, eq=False)
class SLDMatrix:
    """SLD in the computational basis; its kernel-kernel block is zero by convention."""

    mat: np.ndarray
    support_rank: int
    convention: str = "zero off-support block"

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def sld(spec, d_rho):
    """Minimal SLD: ``L_ij = 2 <psi_i|d rho|psi_j> / (lambda_i + lambda_j)`` on support pairs."""
    d_rho = as_hermitian(d_rho, name="d_rho")
    check_rank_stable(spec, d_rho)
    lam = spec.values
    d = spec.to_eigenbasis(d_rho)
    mask = _pair_mask(spec)
    denom = lam[:, None] + lam[None, :]
    l_eig = np.zeros_like(d)
    l_eig[mask] = 2 * d[mask] / denom[mask]
    mat = spec.from_eigenbasis(l_eig)
    return SLDMatrix(0.5 * (mat + mat.conj().T), spec.rank)


def sld_residual(rho, d_rho, L):
    """``max |d rho - (rho L + L rho) / 2|``."""
    L = np.asarray(L)
    return float(np.max(np.abs(d_rho - 0.5 * anticommutator(rho, L))))


def qfim_from_slds(rho, slds, return_imag=False):
    """``F_ab = Tr[rho {L_a, L_b}] / 2`` evaluated literally."""
    mats = [np.asarray(L) for L in slds]
    p = len(mats)
    out = np.zeros((p, p), dtype=complex)
    for a in range(p):
        for b in range(p):
            out[a, b] = 0.5 * np.trace(rho @ anticommutator(mats[a], mats[b]))
    if return_imag:
        return out.real, float(np.max(np.abs(out.imag)))
    return out.real


def qfi_support_sum(spec, d_lambda, overlaps, gram, rank=None):
    """QFI from support eigenvalues and eigenvector derivatives.

    ``F = sum_i (d lambda_i)^2 / lambda_i + 4 sum_i lambda_i <d psi_i|d psi_i>
    - 8 sum_{i,k} lambda_i lambda_k / (lambda_i + lambda_k) |<psi_i|d psi_k>|^2``,
    indices running over the first ``rank`` eigenpairs (the support by default).
    """
    m = spec.rank if rank is None else rank
    lam = spec.values[:m]
    dl = d_lambda[:m]
    pos = lam > 0
    classical = float(np.sum(dl[pos] ** 2 / lam[pos]))
    quantum = 4 * float(np.sum(lam * np.real(gram[:m])))
    denom = lam[:, None] + lam[None, :]
    weights = np.zeros_like(denom)
    ok = denom > 0
    weights[ok] = 8 * np.outer(lam, lam)[ok] / denom[ok]
    quantum -= float(np.sum(weights * np.abs(overlaps[:m, :m]) ** 2))
    return classical + quantum


def qfi_matrix_element(spec, d_rho):
    """``F = sum 2 |<psi_i|d rho|psi_j>|^2 / (lambda_i + lambda_j)`` over support pairs."""
    d = spec.to_eigenbasis(as_hermitian(d_rho))
    lam = spec.values
    mask = _pair_mask(spec)
    denom = (lam[:, None] + lam[None, :])[mask]
    return float(np.sum(2 * np.abs(d[mask]) ** 2 / denom))


def qfi(
    family,
    theta,
    m=0,
    path="support_sum",
    rank_tol=RANK_TOL,
    degeneracy_tol=DEGENERACY_TOL,
    fd_step_first=FD_STEP_FIRST,
):
    """Quantum Fisher information for parameter ``m`` along one evaluation path.

    ``support_sum`` evaluates the support formula term by term and needs a
    non-degenerate support spectrum; ``sld_trace`` computes ``Tr(rho L^2)``;
    ``matrix_element`` sums ``2|d rho_ij|^2/(lambda_i+lambda_j)`` directly.
    """
    if path == "support_sum":
        b = derivative_bundle(family, theta, [m], rank_tol, degeneracy_tol, fd_step_first)
        check_rank_stable(b.spectrum, b.d_rho[0])
        value = qfi_support_sum(b.spectrum, b.d_lambda[0], b.overlaps[0], b.diag_grams[0, 0])
        return _clamp(value)
    rho = family.rho(theta)
    spec = spectral_support(rho, rank_tol)
    d = d_rho_analytic(family, theta, m, fd_step_first)
    if path == "sld_trace":
        L = sld(spec, d).mat
        return _clamp(float(np.trace(rho @ L @ L).real))
    if path == "matrix_element":
        check_rank_stable(spec, d)
        return _clamp(qfi_matrix_element(spec, d))
    raise ValueError(f"unknown QFI path {path!r}; expected one of {PATHS}")


def qfi_all_paths(family, theta, m=0, **kwargs):
    return {path: qfi(family, theta, m, path, **kwargs) for path in PATHS}


def paths_agree(values, atol=1e-7, rtol=1e-6):
    vals = list(values.values()) if isinstance(values, dict) else list(values)
    gap = max(vals) - min(vals)
    return gap <= max(atol, rtol * max(abs(v) for v in vals)), gap


@dataclass(frozen=True, eq=False)
class QFIMResult:
    matrix: np.ndarray
    classical_part: np.ndarray
    quantum_part: np.ndarray


def qfim_from_bundle(bundle):
    """QFIM split into eigenvalue (classical) and eigenvector (quantum) contributions."""
    spec = bundle.spectrum
    m = spec.rank
    lam = spec.support_values
    dl = bundle.d_lambda[:, :m]
    p = bundle.n_params

    classical = (dl / lam) @ dl.T

    denom = lam[:, None] + lam[None, :]
    weights = 8 * np.outer(lam, lam) / denom
    quantum = np.zeros((p, p))
    for a in range(p):
        for b in range(p):
            # <d_a psi_i|psi_j><psi_j|d_b psi_i> = conj(ov_a[j, i]) ov_b[j, i]
            cross = np.conj(bundle.overlaps[a][:m, :m]) * bundle.overlaps[b][:m, :m]
            quantum[a, b] = 4 * np.sum(lam * bundle.diag_grams[a, b, :m].real) - np.sum(
                weights.T * cross.real
            )
    total = classical + quantum
    return QFIMResult(total, classical, quantum)


def qfim(
    family,
    theta,
    rank_tol=RANK_TOL,
    degeneracy_tol=DEGENERACY_TOL,
    fd_step_first=FD_STEP_FIRST,
):
    b = derivative_bundle(family, theta, None, rank_tol, degeneracy_tol, fd_step_first)
    for d in b.d_rho:
        check_rank_stable(b.spectrum, d)
    res = qfim_from_bundle(b)
    for a in range(b.n_params):
        res.matrix[a, a] = _clamp(res.matrix[a, a], "QFIM diagonal")
    return res


def _null_direction(v):
    k = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
    return v * np.sign(v[k])


def crb(info, tol=1e-9):
    """Cramer-Rao bound: ``1/F`` for a scalar, the QFIM inverse for a matrix."""
    if isinstance(info, QFIMResult):
        info = info.matrix
    arr = np.asarray(info, dtype=float)
    if arr.ndim == 0:
        f = float(arr)
        if f <= tol:
            raise SingularInformation(f"Fisher information {f:.3e} is not positive", None)
        return 1.0 / f
    w, v = np.linalg.eigh(0.5 * (arr + arr.T))
    cutoff = tol * max(1.0, float(np.max(np.abs(w))))
    if w[0] <= cutoff:
        direction = _null_direction(v[:, 0])
        raise SingularInformation(
            f"QFIM has eigenvalue {w[0]:.3e}; parameters are not jointly estimable along "
            f"{np.array2string(direction, precision=6)}",
            direction,
        )
    return (v / w) @ v.T
