import numpy as np
import pytest

from nujd.core import CongruenceKind, DiagonalStack, TaggedMatrix


def random_mixing(rng, m, cond_cap=100.0):
    while True:
        a = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
        if np.linalg.cond(a) <= cond_cap:
            return a


def random_unitary(rng, m):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def complex_symmetric(rng, m):
    c = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (c + c.T) / 2


def hermitian(rng, m):
    c = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (c + c.conj().T) / 2


def put_pair(rng, m, margin=0.07, cond_cap=100.0):
    """(A, omega1 real, omega2 complex) with separated two-matrix margins."""
    a = random_mixing(rng, m, cond_cap)
    while True:
        w1 = rng.uniform(0.3, 3.0, m) * rng.choice([-1.0, 1.0], m)
        w2 = rng.uniform(0.3, 3.0, m) * np.exp(2j * np.pi * rng.uniform(size=m))
        ratios = np.sort(np.abs(w1) / np.abs(w2))
        if np.min(np.diff(ratios) / ratios[:-1]) > margin:
            return a, w1, w2


def tagged_put_pair(a, w1, w2):
    c1 = TaggedMatrix(a @ np.diag(w1) @ a.conj().T, CongruenceKind.HERMITIAN)
    c2 = TaggedMatrix(a @ np.diag(w2) @ a.T, CongruenceKind.TRANSPOSE)
    return c1, c2


def transpose_stack(spectra):
    return DiagonalStack(CongruenceKind.TRANSPOSE, np.asarray(spectra, dtype=complex))


def hermitian_stack(spectra):
    return DiagonalStack(CongruenceKind.HERMITIAN, np.asarray(spectra, dtype=complex))


def random_nonidentifiable_stacks(rng, m=None):
    """Constructed non-identifiable (sym, herm) stack pair.

    Forces one position pair collinear in every present family with matching
    proportionality moduli, so the joint diagonalizer is provably not
    essentially unique; either family may be empty or pair-dead.
    """
    m = int(rng.integers(2, 7)) if m is None else m
    ns = int(rng.integers(0, 4))
    nh = int(rng.integers(0, 4))
    if ns == 0 and nh == 0:
        ns = 1
    k, l = sorted(rng.choice(m, size=2, replace=False).tolist())
    sym = rng.standard_normal((ns, m)) + 1j * rng.standard_normal((ns, m))
    herm = rng.standard_normal((nh, m))
    r = float(rng.uniform(0.2, 4.0))
    phase = float(rng.uniform(0, 2 * np.pi))
    sign = -1.0 if rng.uniform() < 0.3 else 1.0
    if ns:
        sym[:, l] = r * np.exp(1j * phase) * sym[:, k]
    if nh:
        herm[:, l] = sign * r * herm[:, k]
    if ns and m > 2 and rng.uniform() < 0.15:
        sym[:, k] = 0.0
        sym[:, l] = 0.0
    sym_stack = DiagonalStack(CongruenceKind.TRANSPOSE, sym) if ns else None
    herm_stack = DiagonalStack(CongruenceKind.HERMITIAN, herm) if nh else None
    return sym_stack, herm_stack


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
