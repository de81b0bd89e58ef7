"""Matrix Lie groups and algebras: u(1), su(n), so(1,3), gl(4).

Algebra elements are stored as full matrices even for u(1) (1x1 imaginary),
so brackets, exponentials and conjugations share one code path.  Each group
tag carries a real basis of its algebra; coordinate maps against that basis
feed the orbit-orthogonality solver and random sampling.

The epsilon-contraction pairing of two matrix values,

    P(M, N) = eps_{abcd} Mhat^{ab} Nhat^{cd},

raises second indices with eta^{-1} (Lorentz case) or a supplied inverse
metric, and optionally weights with sqrt|det g|; only the antisymmetric part
of each raised matrix survives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .conventions import EPS_ALG
from .errors import UnknownGroup

__all__ = [
    "GroupSpec",
    "group",
    "bracket",
    "group_exp",
    "group_inv",
    "trace_pair",
    "inner_pair",
    "project_algebra",
    "check_algebra",
    "check_group_element",
    "algebra_coords",
    "algebra_from_coords",
    "random_algebra_value",
    "random_group_value",
    "EPS4",
    "MINKOWSKI",
    "bullet_pair",
    "antisym_raised",
]

MINKOWSKI = np.diag([1.0, -1.0, -1.0, -1.0])


def _eps4() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        sign = 1
        s = list(perm)
        for i in range(4):
            for j in range(i + 1, 4):
                if s[i] > s[j]:
                    sign = -sign
        eps[perm] = sign
    return eps


EPS4 = _eps4()


@dataclass(frozen=True)
class GroupSpec:
    name: str
    dim: int  # matrix size
    dtype: type
    basis: tuple  # real basis of the algebra, tuple of (dim, dim) arrays

    @property
    def algebra_dim(self) -> int:
        return len(self.basis)


def _su_basis(n: int) -> tuple:
    """Anti-hermitian traceless basis: i*(symmetric), (antisymmetric), i*(diagonal)."""
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[a, b] = m[b, a] = 1j
            out.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[a, b] = 1.0
            m[b, a] = -1.0
            out.append(m)
    for a in range(n - 1):
        m = np.zeros((n, n), dtype=complex)
        m[: a + 1, : a + 1] = np.eye(a + 1) * 1j
        m[a + 1, a + 1] = -1j * (a + 1)
        out.append(m / np.sqrt(a + 1))
    return tuple(out)


def _so13_basis() -> tuple:
    eta = MINKOWSKI
    out = []
    for a in range(4):
        for b in range(a + 1, 4):
            m = np.zeros((4, 4))
            for c in range(4):
                for d in range(4):
                    m[c, d] = eta[a, d] * (c == b) - eta[b, d] * (c == a)
            out.append(m)
    return tuple(out)


def _gl4_basis() -> tuple:
    out = []
    for a in range(4):
        for b in range(4):
            m = np.zeros((4, 4))
            m[a, b] = 1.0
            out.append(m)
    return tuple(out)


@lru_cache(maxsize=None)
def group(tag: str) -> GroupSpec:
    if tag == "u1":
        return GroupSpec("u1", 1, complex, (np.array([[1j]]),))
    if tag.startswith("su") and tag[2:].isdigit():
        n = int(tag[2:])
        if n >= 2:
            return GroupSpec(tag, n, complex, _su_basis(n))
    if tag == "so13":
        return GroupSpec("so13", 4, float, _so13_basis())
    if tag == "gl4":
        return GroupSpec("gl4", 4, float, _gl4_basis())
    raise UnknownGroup(f"no group registered under tag '{tag}'")


# ---------------------------------------------------------------------------
# pointwise (stacked) matrix operations


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...jk->...ik", x, y) - np.einsum(
        "...ij,...jk->...ik", y, x
    )


def group_exp(x: np.ndarray) -> np.ndarray:
    """Matrix exponential, stacked over leading axes."""
    return expm(x)


def group_inv(g: np.ndarray) -> np.ndarray:
    return np.linalg.inv(g)


def trace_pair(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ji->...", x, y)


def inner_pair(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Hermitian pairing <u, v> = sum conj(u_i) v_i (antilinear first slot)."""
    return np.einsum("...i,...i->...", np.conj(u), v)


# ---------------------------------------------------------------------------
# algebra membership


def project_algebra(x: np.ndarray, tag: str) -> np.ndarray:
    spec = group(tag)
    if spec.name == "u1":
        return 1j * x.imag
    if spec.name.startswith("su"):
        anti = 0.5 * (x - np.conj(np.swapaxes(x, -1, -2)))
        tr = np.einsum("...ii->...", anti) / spec.dim
        return anti - tr[..., None, None] * np.eye(spec.dim)
    if spec.name == "so13":
        eta = MINKOWSKI
        return 0.5 * (x - np.einsum("ij,...kj,kl->...il", eta, x, eta))
    if spec.name == "gl4":
        return x
    raise UnknownGroup(tag)


def check_algebra(x: np.ndarray, tag: str, tol: float = EPS_ALG) -> bool:
    return float(np.max(np.abs(x - project_algebra(x, tag)))) <= tol


def check_group_element(g: np.ndarray, tag: str, tol: float = 1e-9) -> bool:
    spec = group(tag)
    eye = np.eye(spec.dim)
    if spec.name == "u1" or spec.name.startswith("su"):
        uu = np.einsum("...ij,...kj->...ik", g, np.conj(g))
        ok = np.max(np.abs(uu - eye)) <= tol
        if spec.name.startswith("su"):
            ok = ok and np.max(np.abs(np.linalg.det(g) - 1)) <= tol
        return bool(ok)
    if spec.name == "so13":
        eta = MINKOWSKI
        r = np.einsum("...ji,jk,...kl->...il", g, eta, g)
        return bool(np.max(np.abs(r - eta)) <= tol)
    if spec.name == "gl4":
        return bool(np.min(np.abs(np.linalg.det(g))) > 0)
    raise UnknownGroup(tag)


# ---------------------------------------------------------------------------
# coordinates against the registered basis


@lru_cache(maxsize=None)
def _coord_solver(tag: str) -> np.ndarray:
    """Pseudo-inverse mapping flattened (re, im) matrices to basis coords."""
    spec = group(tag)
    cols = []
    for b in spec.basis:
        cols.append(np.concatenate([b.real.ravel(), np.asarray(b, complex).imag.ravel()]))
    mat = np.stack(cols, axis=1)  # (2 d^2, k)
    return np.linalg.pinv(mat)


def algebra_coords(x: np.ndarray, tag: str) -> np.ndarray:
    """Real coordinates of x in the registered basis (leading axes kept)."""
    spec = group(tag)
    d = spec.dim
    lead = x.shape[:-2]
    flat = x.reshape(lead + (d * d,))
    stacked = np.concatenate([flat.real, np.asarray(flat, complex).imag], axis=-1)
    pinv = _coord_solver(tag)
    return np.einsum("kj,...j->...k", pinv, stacked)


def algebra_from_coords(c: np.ndarray, tag: str) -> np.ndarray:
    spec = group(tag)
    basis = np.stack(spec.basis)  # (k, d, d)
    return np.einsum("...k,kij->...ij", np.asarray(c, float), basis).astype(
        spec.dtype
    )


# ---------------------------------------------------------------------------
# sampling


def random_algebra_value(rng: np.random.Generator, tag: str, scale: float = 1.0):
    spec = group(tag)
    c = rng.normal(scale=scale, size=spec.algebra_dim)
    return algebra_from_coords(c, tag)


def random_group_value(rng: np.random.Generator, tag: str, scale: float = 1.0):
    return group_exp(random_algebra_value(rng, tag, scale))


# ---------------------------------------------------------------------------
# epsilon-contraction pairing


def antisym_raised(m: np.ndarray, raiser: np.ndarray) -> np.ndarray:
    """Antisymmetric part of m with the second index raised by `raiser`."""
    up = np.einsum("...ab,...bc->...ac", m, raiser)
    return 0.5 * (up - np.swapaxes(up, -1, -2))


def bullet_pair(
    m: np.ndarray,
    n: np.ndarray,
    raiser: Optional[np.ndarray] = None,
    weight: Optional[np.ndarray] = None,
) -> np.ndarray:
    """eps_{abcd} mhat^{ab} nhat^{cd}, optionally weighted by sqrt|det g|.

    `raiser` defaults to the inverse Minkowski metric; pass a node-wise
    inverse metric for the GL(4)-weighted variant.  Symmetric parts of the
    raised matrices drop out by antisymmetry of eps.
    """
    if raiser is None:
        raiser = MINKOWSKI  # eta^{-1} = eta
    mhat = np.einsum("...ab,...bc->...ac", m, raiser)
    nhat = np.einsum("...ab,...bc->...ac", n, raiser)
    out = np.einsum("abcd,...ab,...cd->...", EPS4, mhat, nhat)
    if weight is not None:
        out = out * weight
    return out
