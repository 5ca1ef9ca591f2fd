"""Parameter derivatives of rho(theta) and of its eigensystem.

Eigenvector derivatives come from first-order perturbation theory applied to
``d rho`` in the parallel-transport gauge ``<psi_i|d psi_i> = 0``; eigenvectors
are never differenced directly because solver phases jump between calls.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .hermlin import as_hermitian
from .states import RANK_TOL, spectral_support

FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-3
DEGENERACY_TOL = 1e-8


def _herm(m):
    return 0.5 * (m + m.conj().T)


def _traceless(m):
    # Tr rho is identically 1; whatever trace survives differencing is round-off
    m = _herm(m)
    return m - (np.trace(m).real / m.shape[0]) * np.eye(m.shape[0])


def _shifted(family, theta, shifts):
    t = family._theta(theta).copy()
    for idx, amount in shifts:
        t[idx] += amount
    return family.rho(t)


def d_rho_fd(family, theta, m, step=FD_STEP_FIRST):
    """Central difference ``(rho(theta + h e_m) - rho(theta - h e_m)) / 2h``."""
    plus = _shifted(family, theta, [(m, step)])
    minus = _shifted(family, theta, [(m, -step)])
    return _traceless((plus - minus) / (2 * step))


def d2_rho_fd(family, theta, a, b, step=FD_STEP_SECOND):
    if a == b:
        plus = _shifted(family, theta, [(a, step)])
        minus = _shifted(family, theta, [(a, -step)])
        centre = family.rho(theta)
        return _traceless((plus - 2 * centre + minus) / step**2)
    pp = _shifted(family, theta, [(a, step), (b, step)])
    pm = _shifted(family, theta, [(a, step), (b, -step)])
    mp = _shifted(family, theta, [(a, -step), (b, step)])
    mm = _shifted(family, theta, [(a, -step), (b, -step)])
    return _traceless((pp - pm - mp + mm) / (4 * step**2))


def d_rho_analytic(family, theta, m, step=FD_STEP_FIRST):
    """``d rho / d theta_m``; exact when the family provides it, else a central difference."""
    exact = family.d_rho_exact(theta, m)
    if exact is None:
        return d_rho_fd(family, theta, m, step)
    return _herm(exact)


def d2_rho(family, theta, a, b, step=FD_STEP_SECOND):
    exact = family.d2_rho_exact(theta, a, b)
    if exact is None:
        return d2_rho_fd(family, theta, a, b, step)
    return _herm(exact)


def eigen_derivatives(spec, d_rho, degeneracy_tol=DEGENERACY_TOL):
    """Hellmann-Feynman eigenvalue derivatives and the overlap matrix.

    Returns ``(d_lambda, overlaps)`` with ``overlaps[i, j] = <psi_i|d psi_j>``,
    zero on the diagonal and between pairs of kernel vectors (those never enter
    a support sum, and their mutual basis is arbitrary).
    """
    d_rho = as_hermitian(d_rho, name="d_rho")
    lam = spec.values
    n, rank = spec.dim, spec.rank
    pairs = spec.support_degeneracies(degeneracy_tol)
    if pairs:
        i, j = pairs[0]
        raise DegenerateSpectrum(
            f"eigenvalues {lam[i]:.12g} and {lam[j]:.12g} (indices {i}, {j}) are closer than "
            f"{degeneracy_tol:g}; eigenvector derivatives are undefined",
            (lam[i], lam[j]),
        )
    d = spec.to_eigenbasis(d_rho)
    d_lambda = d.diagonal().real.copy()

    gap = lam[np.newaxis, :] - lam[:, np.newaxis]  # gap[i, j] = lambda_j - lambda_i
    active = np.zeros((n, n), dtype=bool)
    active[:rank, :] = True
    active[:, :rank] = True
    np.fill_diagonal(active, False)
    overlaps = np.zeros((n, n), dtype=complex)
    overlaps[active] = d[active] / gap[active]
    return d_lambda, overlaps


def diag_gram(ov_a, ov_b, i):
    """``<d_a psi_i | d_b psi_i>`` by completeness in the zero-diagonal gauge."""
    col_a = np.delete(ov_a[:, i], i)
    col_b = np.delete(ov_b[:, i], i)
    return complex(np.vdot(col_a, col_b))


def second_eigen_derivatives(spec, d_rho, d2_rho):
    """Second derivatives of the support eigenvalues by second-order perturbation.

    ``d2 lambda_i = <psi_i|d2 rho|psi_i> + 2 sum_{k != i} |<psi_k|d rho|psi_i>|^2 / (lambda_i - lambda_k)``.
    """
    d = spec.to_eigenbasis(as_hermitian(d_rho))
    d2 = spec.to_eigenbasis(as_hermitian(d2_rho))
    lam = spec.values
    out = np.empty(spec.rank)
    for i in range(spec.rank):
        others = np.arange(spec.dim) != i
        out[i] = d2[i, i].real + 2 * np.sum(np.abs(d[others, i]) ** 2 / (lam[i] - lam[others]))
    return out


@dataclass(frozen=True, eq=False)
class DerivativeBundle:
    spectrum: object  # SpectralData
    d_rho: tuple  # P arrays
    d2_rho: object  # P x P x N x N array, or None
    d_lambda: np.ndarray  # P x N
    overlaps: np.ndarray  # P x N x N, overlaps[m, i, j] = <psi_i|d_m psi_j>
    diag_grams: np.ndarray  # P x P x N

    @property
    def n_params(self):
        return len(self.d_rho)


def derivative_bundle(
    family,
    theta,
    params=None,
    rank_tol=RANK_TOL,
    degeneracy_tol=DEGENERACY_TOL,
    fd_step_first=FD_STEP_FIRST,
    fd_step_second=FD_STEP_SECOND,
    second_order=False,
):
    """Collect everything the support formulas need at ``theta``.

    ``params`` restricts the bundle to a subset of parameter indices (the
    bundle is then indexed by position in that subset).
    """
    if params is None:
        params = range(family.n_params)
    params = list(params)
    rho = family.rho(theta)
    spec = spectral_support(rho, rank_tol)
    d_rhos = tuple(d_rho_analytic(family, theta, m, fd_step_first) for m in params)
    pieces = [eigen_derivatives(spec, d, degeneracy_tol) for d in d_rhos]
    d_lambda = np.array([p[0] for p in pieces])
    overlaps = np.array([p[1] for p in pieces])
    p, n = len(params), spec.dim
    grams = np.zeros((p, p, n), dtype=complex)
    for a in range(p):
        for b in range(p):
            for i in range(n):
                grams[a, b, i] = diag_gram(overlaps[a], overlaps[b], i)
    d2 = None
    if second_order:
        d2 = np.zeros((p, p, n, n), dtype=complex)
        for a in range(p):
            for b in range(a, p):
                d2[a, b] = d2[b, a] = d2_rho(family, theta, params[a], params[b], fd_step_second)
    return DerivativeBundle(spec, d_rhos, d2, d_lambda, overlaps, grams)
