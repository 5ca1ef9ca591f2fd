"""Random states, generators and families for property tests and benchmarks."""

import numpy as np

from .states import UnitaryFamily
from .xstate import XStateParams


def random_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (a + a.conj().T)
    return scale * h / np.linalg.norm(h, 2)


def random_spectrum(rng, n, rank, min_value=0.02, min_gap=0.02):
    """``rank`` positive eigenvalues summing to one, padded with zeros to length ``n``.

    Values are kept away from zero and from each other so that the spectrum is
    non-degenerate at the default tolerances.
    """
    while True:
        vals = rng.dirichlet(np.ones(rank))
        s = np.sort(vals)
        if s[0] >= min_value / rank and (rank == 1 or np.min(np.diff(s)) >= min_gap / rank):
            break
    return np.concatenate([np.sort(vals)[::-1], np.zeros(n - rank)])


def random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    u = random_unitary(rng, n)
    rho = (u * random_spectrum(rng, n, rank)) @ u.conj().T
    return 0.5 * (rho + rho.conj().T)


def random_family(rng, n, rank=None, n_params=1):
    gens = tuple(random_hermitian(rng, n) for _ in range(n_params))
    return UnitaryFamily(random_density(rng, n, rank), gens)


def random_pure_family(rng, n, n_params=2, commuting=False):
    psi = random_unitary(rng, n)[:, 0]
    if commuting:
        u = random_unitary(rng, n)
        gens = tuple((u * rng.standard_normal(n)) @ u.conj().T for _ in range(n_params))
        gens = tuple(0.5 * (g + g.conj().T) for g in gens)
    else:
        gens = tuple(random_hermitian(rng, n) for _ in range(n_params))
    return UnitaryFamily(np.outer(psi, psi.conj()), gens), psi


def random_xstate_params(rng, on_bound=False):
    """Uniformly-ish random valid X-state parameters.

    With ``on_bound`` the sample satisfies ``a = d = |w|`` and ``b = c``.
    """
    phase = np.exp(2j * np.pi * rng.random())
    if on_bound:
        a = 0.5 * rng.uniform(0.05, 0.95)
        b = 0.5 - a
        return XStateParams(a, b, b, a, a * phase)
    a, b, c, d = rng.dirichlet(np.ones(4))
    d = 1.0 - a - b - c
    w = rng.random() * np.sqrt(a * d) * phase
    return XStateParams(a, b, c, d, w)
