"""Dense complex Hermitian linear algebra.

Everything downstream works on plain ``numpy`` complex arrays; the helpers here
validate, symmetrize and decompose them with deterministic conventions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    EigenSolverError,
    HermiticityError,
    NotPositiveSemidefinite,
)

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
ROUNDOFF_FLOOR = 1e-14
TIE_GAP = 1e-12


def as_square(a, name="matrix"):
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def hermiticity_defect(a):
    """Largest entrywise deviation ``max |A_ij - conj(A_ji)|``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T)))


@dataclass(frozen=True)
class HermitianMatrix:
    """Symmetrized Hermitian matrix together with its pre-symmetrization defect.

    Instances convert transparently with ``np.asarray``.
    """

    data: np.ndarray
    defect: float = 0.0

    @classmethod
    def from_array(cls, a, tol=None, name="matrix"):
        m = as_square(a, name)
        defect = hermiticity_defect(m)
        if tol is None:
            tol = HERMITICITY_TOL * max(1.0, float(np.max(np.abs(m))))
        if defect > tol:
            raise HermiticityError(f"{name} is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")
        data = 0.5 * (m + m.conj().T)
        data.setflags(write=False)
        return cls(data, defect)

    @property
    def dim(self):
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)


def as_hermitian(a, tol=None, name="matrix"):
    """Validate ``a`` as Hermitian and return the symmetrized array."""
    if isinstance(a, HermitianMatrix):
        return a.data
    return HermitianMatrix.from_array(a, tol=tol, name=name).data


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns, matching ``values``

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.conj().T


def _fix_phase(v):
    mags = np.abs(v)
    # first component within round-off of the maximum, so ties resolve by index
    k = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
    return v * (np.conj(v[k]) / mags[k]), k


def eig_hermitian(h):
    """Eigendecomposition with eigenvalues in descending order.

    Numerically tied eigenvalues are ordered by the index of each vector's
    dominant component, and every vector is rotated so that component is real
    and positive.
    """
    h = as_hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver failed: {exc}") from exc
    w = w[::-1].copy()
    v = v[:, ::-1].copy()

    lead = np.empty(len(w), dtype=int)
    for j in range(len(w)):
        v[:, j], lead[j] = _fix_phase(v[:, j])

    order = np.arange(len(w))
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop - 1] - w[stop] < TIE_GAP:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            order[start:stop] = block[np.argsort(lead[block], kind="stable")]
        start = stop
    w, v = w[order], v[:, order]

    scale = max(1.0, float(np.max(np.abs(h))))
    residual = float(np.max(np.abs(h @ v - v * w))) / scale
    if not np.isfinite(residual) or residual > 1e-9:
        raise EigenSolverError(f"eigendecomposition residual {residual:.3e} too large", residual)
    return EigenSystem(w, v)


def psd_sqrt(p, tol=PSD_TOL):
    """Principal square root of a positive-semidefinite Hermitian matrix.

    Eigenvalues in ``[-tol, 0)`` are treated as round-off and clamped to zero,
    as are positive ones below ``1e-14`` times the spectral radius (their square
    roots would otherwise inject ~1e-8 noise into rank-deficient inputs).
    """
    es = eig_hermitian(p)
    lowest = float(es.values[-1])
    if lowest < -tol:
        raise NotPositiveSemidefinite(f"matrix has eigenvalue {lowest:.3e} < -{tol:.1e}", lowest)
    floor = ROUNDOFF_FLOOR * max(abs(float(es.values[0])), abs(lowest))
    root = np.sqrt(np.where(es.values <= floor, 0.0, es.values))
    s = (es.vectors * root) @ es.vectors.conj().T
    return 0.5 * (s + s.conj().T)


def trace(m):
    return complex(np.trace(as_square(m)))


def hconj(m):
    return np.asarray(m).conj().T


def matmul(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def max_abs(m):
    return float(np.max(np.abs(m))) if np.size(m) else 0.0
