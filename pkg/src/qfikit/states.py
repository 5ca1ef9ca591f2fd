"""Density matrices, support extraction and parameterized state families."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidState, ValidationError
from .hermlin import as_hermitian, as_square, commutator, eig_hermitian

RANK_TOL = 1e-10
STATE_TOL = 1e-10


def density_matrix(rho, tol=STATE_TOL, name="rho"):
    """Validate ``rho`` as a density matrix and return it symmetrized."""
    rho = as_hermitian(rho, name=name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"{name} has trace {tr:.12g}, expected 1")
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -tol:
        raise InvalidState(f"{name} has negative eigenvalue {lowest:.3e}")
    return rho


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-decomposition of a density matrix split into support and kernel.

    ``values`` are descending, so the support is the leading ``rank`` columns.
    """

    values: np.ndarray
    vectors: np.ndarray
    rank: int
    rank_tol: float = RANK_TOL

    @property
    def dim(self):
        return len(self.values)

    @property
    def support_values(self):
        return self.values[: self.rank]

    @property
    def support_vectors(self):
        return self.vectors[:, : self.rank]

    def projector(self):
        s = self.support_vectors
        return s @ s.conj().T

    def kernel_projector(self):
        k = self.vectors[:, self.rank:]
        return k @ k.conj().T

    def to_eigenbasis(self, op):
        return self.vectors.conj().T @ op @ self.vectors

    def from_eigenbasis(self, op):
        return self.vectors @ op @ self.vectors.conj().T

    def support_degeneracies(self, tol):
        """Index pairs ``(i, j)`` with ``|lambda_i - lambda_j| < tol`` and ``i`` in the support."""
        lam = self.values
        pairs = []
        for i in range(self.rank):
            for j in range(i + 1, self.dim):
                if abs(lam[i] - lam[j]) < tol:
                    pairs.append((i, j))
        return pairs


def spectral_support(rho, rank_tol=RANK_TOL):
    if not 0.0 < rank_tol < 1.0:
        raise ValidationError(f"rank_tol must lie in (0, 1), got {rank_tol}")
    es = eig_hermitian(rho)
    rank = int(np.count_nonzero(es.values > rank_tol))
    if rank == 0:
        raise InvalidState("no eigenvalue exceeds rank_tol; not a density matrix")
    return SpectralData(es.values, es.vectors, rank, rank_tol)


def matrix_exp_antihermitian(a, tol=1e-10):
    """``exp(a)`` for anti-Hermitian ``a = -iH``, via the spectrum of ``H``."""
    a = as_square(a, "exponent")
    h = 1j * a
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > tol * scale:
        raise ValidationError("exponent is not anti-Hermitian")
    es = eig_hermitian(h)
    u = (es.vectors * np.exp(-1j * es.values)) @ es.vectors.conj().T
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))
    if defect > tol:
        raise ValidationError(f"matrix exponential lost unitarity ({defect:.3e})")
    return u


class StateFamily:
    """Smooth map ``theta -> rho(theta)`` over ``n_params`` real parameters.

    Subclasses implement :meth:`rho`. They may also supply exact first and second
    derivatives; returning ``None`` makes callers fall back to finite differences.
    """

    dim: int
    n_params: int

    def rho(self, theta):
        raise NotImplementedError

    def d_rho_exact(self, theta, m):
        return None

    def d2_rho_exact(self, theta, a, b):
        return None

    def _theta(self, theta):
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape != (self.n_params,):
            raise DimensionError(f"theta must have length {self.n_params}, got {t.shape}")
        return t


@dataclass(frozen=True, eq=False)
class UnitaryFamily(StateFamily):
    """``rho(theta) = U rho0 U^dagger`` with ``U = exp(-i sum_m theta_m G_m)``."""

    rho0: np.ndarray
    generators: tuple
    commuting: bool = field(init=False)

    def __post_init__(self):
        rho0 = density_matrix(self.rho0, name="rho0")
        gens = tuple(as_hermitian(g, name=f"generator {k}") for k, g in enumerate(self.generators))
        if not gens:
            raise ValidationError("at least one generator is required")
        for k, g in enumerate(gens):
            if g.shape != rho0.shape:
                raise DimensionError(f"generator {k} has shape {g.shape}, rho0 has {rho0.shape}")
        scale = max(1.0, max(float(np.max(np.abs(g))) for g in gens))
        commuting = all(
            np.max(np.abs(commutator(gens[i], gens[j]))) <= 1e-12 * scale**2
            for i in range(len(gens))
            for j in range(i + 1, len(gens))
        )
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "commuting", commuting)

    @property
    def dim(self):
        return self.rho0.shape[0]

    @property
    def n_params(self):
        return len(self.generators)

    def unitary(self, theta):
        t = self._theta(theta)
        h = sum(tm * g for tm, g in zip(t, self.generators))
        return matrix_exp_antihermitian(-1j * h)

    def rho(self, theta):
        t = self._theta(theta)
        if not np.any(t):
            return self.rho0.copy()
        u = self.unitary(t)
        out = u @ self.rho0 @ u.conj().T
        return 0.5 * (out + out.conj().T)

    def d_rho_exact(self, theta, m):
        if not self.commuting:
            return None
        return -1j * commutator(self.generators[m], self.rho(theta))

    def d2_rho_exact(self, theta, a, b):
        if not self.commuting:
            return None
        r = self.rho(theta)
        ga, gb = self.generators[a], self.generators[b]
        out = -0.5 * (commutator(ga, commutator(gb, r)) + commutator(gb, commutator(ga, r)))
        return 0.5 * (out + out.conj().T)


@dataclass(frozen=True, eq=False)
class LinearFamily(StateFamily):
    """``rho(theta) = rho0 + sum_m theta_m D_m`` with traceless Hermitian directions.

    Covers classical (eigenvalue-only) parameterizations. Positivity of
    ``rho(theta)`` is checked on evaluation.
    """

    rho0: np.ndarray
    directions: tuple

    def __post_init__(self):
        rho0 = density_matrix(self.rho0, name="rho0")
        dirs = tuple(as_hermitian(d, name=f"direction {k}") for k, d in enumerate(self.directions))
        if not dirs:
            raise ValidationError("at least one direction is required")
        for k, d in enumerate(dirs):
            if d.shape != rho0.shape:
                raise DimensionError(f"direction {k} has shape {d.shape}, rho0 has {rho0.shape}")
            if abs(np.trace(d)) > 1e-10:
                raise ValidationError(f"direction {k} is not traceless")
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "directions", dirs)

    @property
    def dim(self):
        return self.rho0.shape[0]

    @property
    def n_params(self):
        return len(self.directions)

    def rho(self, theta):
        t = self._theta(theta)
        return density_matrix(self.rho0 + sum(tm * d for tm, d in zip(t, self.directions)))

    def d_rho_exact(self, theta, m):
        return self.directions[m].copy()

    def d2_rho_exact(self, theta, a, b):
        return np.zeros_like(self.rho0)


def evaluate(family, theta):
    """Density matrix of ``family`` at ``theta`` (validated)."""
    return density_matrix(family.rho(theta))
