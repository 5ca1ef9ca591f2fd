"""Closed forms for the two-qubit X state with ``z = sqrt(b c)``.

Basis order is ``|00>, |01>, |10>, |11>``; the "alpha" generator is
``sigma_z (x) I`` and the "beta" generator ``I (x) sigma_z``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PositivityViolation
from .states import RANK_TOL, SpectralData, UnitaryFamily

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
IDENTITY2 = np.eye(2, dtype=complex)
GENERATORS = {
    "alpha": np.kron(SIGMA_Z, IDENTITY2),
    "beta": np.kron(IDENTITY2, SIGMA_Z),
}


@dataclass(frozen=True)
class XStateParams:
    a: float
    b: float
    c: float
    d: float
    w: complex = 0.0

    def __post_init__(self):
        for name in "abcd":
            if getattr(self, name) < 0:
                raise PositivityViolation(f"diagonal entry {name} = {getattr(self, name)} is negative")
        total = self.a + self.b + self.c + self.d
        if abs(total - 1) > 1e-12:
            raise PositivityViolation(f"a + b + c + d = {total!r}, expected 1")
        if self.a * self.d < abs(self.w) ** 2 - 1e-12:
            raise PositivityViolation(
                f"a*d = {self.a * self.d:.6g} < |w|^2 = {abs(self.w) ** 2:.6g}"
            )
        object.__setattr__(self, "w", complex(self.w))

    @property
    def z(self):
        return np.sqrt(self.b * self.c)

    @property
    def discriminant(self):
        return (self.a - self.d) ** 2 + 4 * abs(self.w) ** 2

    def on_bound(self, tol=1e-12):
        """True where ``F = 8(|w| + sqrt(bc))`` holds with equality.

        The two inequalities saturate independently: the coherence term when
        ``a = d = |w|`` or ``w = 0``, the population term when ``b = c`` or ``bc = 0``.
        """
        aw = abs(self.w)
        first = aw <= tol or (abs(self.a - self.d) <= tol and abs(self.a - aw) <= tol)
        second = self.b * self.c <= tol or abs(self.b - self.c) <= tol
        return first and second


def xstate_density(p):
    a, b, c, d, w, z = p.a, p.b, p.c, p.d, p.w, p.z
    return np.array(
        [
            [a, 0, 0, np.conj(w)],
            [0, b, z, 0],
            [0, z, c, 0],
            [w, 0, 0, d],
        ],
        dtype=complex,
    )


def xstate_family(p, generators=("alpha",)):
    gens = tuple(GENERATORS[g] if isinstance(g, str) else g for g in generators)
    return UnitaryFamily(xstate_density(p), gens)


def xstate_spectrum(p, rank_tol=RANK_TOL):
    """Eigenvalues and eigenvectors from the closed-form expressions.

    Order before sorting is ``lambda_+, lambda_1, lambda_-, lambda_2 = 0``; a
    stable descending sort keeps that order among ties.
    """
    a, b, c, d, w = p.a, p.b, p.c, p.d, p.w
    e = np.eye(4, dtype=complex)
    root = np.sqrt(p.discriminant)
    lam_plus, lam_minus = 0.5 * (a + d + root), 0.5 * (a + d - root)

    if abs(w) > 0:
        vecs_pm = []
        for sign in (1, -1):
            eps = np.sqrt(2) * abs(w) / np.sqrt(p.discriminant + sign * (a - d) * root)
            vecs_pm.append(eps * np.array([(a - d + sign * root) / (2 * w), 0, 0, 1], dtype=complex))
        psi_plus, psi_minus = vecs_pm
    elif a >= d:
        psi_plus, psi_minus = e[0], e[3]
    else:
        psi_plus, psi_minus = e[3], e[0]

    if b > 0 and c > 0:
        eps1 = np.sqrt(c / (b + c))
        psi_1 = eps1 * np.array([0, np.sqrt(b / c), 1, 0], dtype=complex)
        psi_2 = np.array([0, np.sqrt(c), -np.sqrt(b), 0], dtype=complex) / np.sqrt(b + c)
    elif c == 0 and b > 0:
        psi_1, psi_2 = e[1], e[2]
    else:
        # b == 0: lambda_1 = c on |10>, or both vanish and the branch is just a zero
        psi_1, psi_2 = e[2], e[1]

    values = np.array([lam_plus, b + c, lam_minus, 0.0])
    vectors = np.column_stack([psi_plus, psi_1, psi_minus, psi_2])
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    rank = int(np.count_nonzero(values > rank_tol))
    return SpectralData(values, vectors, rank, rank_tol)


def _terms(p):
    coherence = abs(p.w) ** 2 / (p.a + p.d) if p.a + p.d > 0 else 0.0
    population = p.b * p.c / (p.b + p.c) if p.b + p.c > 0 else 0.0
    return coherence, population


def xstate_qfi_closed(p):
    """QFI for the ``sigma_z (x) I`` generator: ``16(|w|^2/(a+d) + bc/(b+c))``."""
    coherence, population = _terms(p)
    return 16 * (coherence + population)


def xstate_qfi_bound(p):
    return 8 * (abs(p.w) + np.sqrt(p.b * p.c))


def xstate_qfim_closed(p):
    """QFIM for generators ``(sigma_z (x) I, I (x) sigma_z)``."""
    coherence, population = _terms(p)
    diag = 16 * (coherence + population)
    off = 16 * (coherence - population)
    return np.array([[diag, off], [off, diag]])
