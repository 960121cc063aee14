"""Cayley-Menger matching kernel.

For squared microphone distances ``D`` and squared source distances ``u`` the
bordered determinant

    | 0    u_1 ... u_n  1 |
    | u_1  D_11 ... D_1n 1 |
    | ...                  |
    | u_n  D_n1 ... D_nn 1 |
    | 1    1   ...  1    0 |

vanishes when a single point is at squared distance ``u_i`` from microphone
``i``.  The kernel is generic in ``n`` (3 microphones in 2D, 4 in 3D).
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .exceptions import DegenerateScale, IllConditioned
from .geometry import dist2, is_exact, is_exact_scalar

Matrix = List[list]


def mic_gram(mics: Sequence[Sequence]) -> Tuple[tuple, ...]:
    """Matrix of squared inter-microphone distances."""
    return tuple(tuple(dist2(a, b) for b in mics) for a in mics)


def check_mic_gram(D, dim: int = None) -> None:
    n = len(D)
    if any(len(row) != n for row in D):
        raise ValueError("distance matrix is not square")
    for i in range(n):
        if D[i][i] != 0:
            raise ValueError("distance matrix has nonzero diagonal")
        for j in range(n):
            if D[i][j] != D[j][i]:
                raise ValueError("distance matrix is not symmetric")
            if D[i][j] < 0:
                raise ValueError("negative squared distance")
    if dim is not None and not is_realizable(D, dim):
        raise ValueError(f"distances are not realizable in {dim} dimensions")


def cm_matrix(u: Sequence, D: Sequence[Sequence]) -> Matrix:
    n = len(u)
    if len(D) != n or any(len(row) != n for row in D):
        raise ValueError(f"{n} source distances but a {len(D)}x{len(D[0]) if D else 0} microphone matrix")
    top = [0] + list(u) + [1]
    rows = [top]
    for i in range(n):
        rows.append([u[i]] + list(D[i]) + [1])
    rows.append([1] * (n + 1) + [0])
    return rows


def bareiss_det(M: Matrix):
    """Fraction-free determinant.  Exact for int input; works on Fractions too."""
    A = [list(row) for row in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                v = row_i[j] * akk - aik * row_k[j]
                row_i[j] = v // prev if isinstance(v, int) and isinstance(prev, int) else v / prev
        prev = akk
    return sign * A[n - 1][n - 1]


def _common_denominator(values) -> int:
    den = 1
    for v in values:
        if isinstance(v, Fraction):
            den = math.lcm(den, v.denominator)
    return den


def cm_determinant(u: Sequence, D: Sequence[Sequence]):
    """Evaluate the bordered Cayley-Menger determinant.

    Rational input is scaled to integers (the determinant is homogeneous of
    degree ``n`` in the distance block) and evaluated with Bareiss; float
    input goes through LU with partial pivoting.
    """
    M = cm_matrix(u, D)
    n = len(u)
    flat = list(u) + [x for row in D for x in row]
    if all(is_exact_scalar(x) for x in flat):
        k = _common_denominator(flat)
        ints = _scale_distance_block(M, k)
        return Fraction(bareiss_det(ints), k ** n)
    return float(np.linalg.det(np.asarray(M, dtype=float)))


def _scale_distance_block(M: Matrix, k: int) -> Matrix:
    size = len(M)
    out = []
    for i, row in enumerate(M):
        new = []
        for j, x in enumerate(row):
            border = i == size - 1 or j == size - 1
            new.append(int(x) if border else int(x * k))
        out.append(new)
    return out


def distance_scale(u: Sequence, D: Sequence[Sequence]) -> float:
    """Mean of the nonzero entries of the bordered matrix's distance block."""
    entries = [float(x) for x in u] * 2 + [float(x) for row in D for x in row]
    nz = [abs(x) for x in entries if x != 0]
    if not nz:
        raise DegenerateScale("all distances are zero")
    return sum(nz) / len(nz)


def cm_residual(u: Sequence, D: Sequence[Sequence]) -> float:
    """Unit-free size of the determinant, invariant under scene scaling."""
    n = len(u)
    s = distance_scale(u, D)
    return abs(float(cm_determinant(u, D))) / s ** n


def cm_residuals(U: np.ndarray, D: Sequence[Sequence]) -> np.ndarray:
    """Vectorised ``cm_residual`` over the rows of ``U`` (shape (T, n))."""
    U = np.asarray(U, dtype=float)
    T, n = U.shape
    Df = np.asarray(D, dtype=float)
    M = np.zeros((T, n + 2, n + 2))
    M[:, 0, 1:n + 1] = U
    M[:, 1:n + 1, 0] = U
    M[:, 1:n + 1, 1:n + 1] = Df
    M[:, -1, 1:n + 1] = 1.0
    M[:, 1:n + 1, -1] = 1.0
    M[:, 0, -1] = M[:, -1, 0] = 1.0
    dets = np.linalg.det(M)
    nzD = np.abs(Df[Df != 0])
    absU = np.abs(U)
    count = 2 * (absU != 0).sum(axis=1) + nzD.size
    total = 2 * absU.sum(axis=1) + nzD.sum()
    if np.any(count == 0):
        raise DegenerateScale("all distances are zero")
    return np.abs(dets) / (total / count) ** n


def is_realizable(D: Sequence[Sequence], dim: int) -> bool:
    """True iff the squared distances come from points in ``dim`` dimensions.

    Uses the Gram matrix relative to the first point: realizable iff it is
    positive semidefinite of rank at most ``dim``.
    """
    n = len(D)
    if n <= 1:
        return True
    G = [[(D[0][i] + D[0][j] - D[i][j]) for j in range(1, n)] for i in range(1, n)]
    if is_exact(*D):
        G = [[Fraction(x, 2) for x in row] for row in G]
        psd, rank = _exact_psd_rank(G)
        return psd and rank <= dim
    ev = np.linalg.eigvalsh(np.asarray(G, dtype=float) / 2)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(ev))))
    return bool(ev.min() >= -tol and int((ev > tol).sum()) <= dim)


def _exact_psd_rank(G) -> Tuple[bool, int]:
    A = [row[:] for row in G]
    m, rank = len(A), 0
    active = list(range(m))
    while active:
        p = max(active, key=lambda i: A[i][i])
        if A[p][p] < 0:
            return False, rank
        if A[p][p] == 0:
            ok = all(A[i][j] == 0 for i in active for j in active)
            return ok, rank
        active.remove(p)
        for i in active:
            f = A[i][p] / A[p][p]
            for j in active:
                A[i][j] -= f * A[p][j]
        rank += 1
    return True, rank


class CMQuadric:
    """``u -> f_D(u)`` for a fixed microphone matrix, as a quadratic form.

    With ``w = (u_1, ..., u_n, 1)`` and ``M = [[D, 1], [1, 0]]`` the bordered
    determinant equals ``-w^T adj(M) w``.  ``D`` is invariant under rigid
    motions of the vehicle, so the adjugate is computed once per
    configuration and every tuple costs one quadratic form.
    """

    def __init__(self, D: Sequence[Sequence]):
        n = len(D)
        self.n = n
        self.exact = is_exact(*D)
        M = [list(D[i]) + [1] for i in range(n)] + [[1] * n + [0]]
        if self.exact:
            M = [[Fraction(x) for x in row] for row in M]
            det, inv = _exact_inverse(M)
            if det == 0:
                raise IllConditioned("microphones are affinely dependent")
            self.adj = [[det * x for x in row] for row in inv]
            den = _common_denominator(x for row in self.adj for x in row)
            # positive multiple of the form with integer coefficients
            self._int_adj = [[int(x * den) for x in row] for row in self.adj]
        else:
            Mf = np.asarray(M, dtype=float)
            det = np.linalg.det(Mf)
            if det == 0:
                raise IllConditioned("microphones are affinely dependent")
            self.adj = (det * np.linalg.inv(Mf)).tolist()
        self.det = det

    def __call__(self, u: Sequence):
        w = list(u) + [1]
        A = self.adj
        return -sum(A[i][j] * w[i] * w[j] for i in range(self.n + 1) for j in range(self.n + 1))

    def vanishing_tuples(self, value_sets: Sequence[Sequence], prune=None) -> Iterator[Tuple[int, ...]]:
        """Index tuples ``(i_1, ..., i_n)`` with ``f_D(value_sets[k][i_k]) == 0`` exactly.

        Values must be rational.  ``prune(k, chosen_indices)`` may return False
        to skip every completion of a partial tuple.
        """
        if not self.exact:
            raise ValueError("exact enumeration needs a rational microphone matrix")
        n = self.n
        if len(value_sets) != n:
            raise ValueError(f"expected {n} distance sets, got {len(value_sets)}")
        den = _common_denominator(v for vs in value_sets for v in vs)
        U = [[int(v * den) for v in vs] for vs in value_sets]
        A = self._int_adj
        # Q(w) with w = (U_1..U_n, den); den plays the role of the constant 1.
        base_acc = A[n][n] * den * den
        base_g = [A[j][n] * den for j in range(n)]
        chosen = [0] * n

        def rec(k, acc, g):
            vals = U[k]
            akk = A[k][k]
            last = k == n - 1
            for idx, x in enumerate(vals):
                chosen[k] = idx
                if prune is not None and not prune(k, chosen):
                    continue
                acc2 = acc + x * (2 * g[k] + akk * x)
                if last:
                    if acc2 == 0:
                        yield tuple(chosen)
                else:
                    g2 = g[:]
                    for j in range(k + 1, n):
                        g2[j] += A[k][j] * x
                    yield from rec(k + 1, acc2, g2)

        yield from rec(0, base_acc, base_g)


def _exact_inverse(M):
    """Gauss-Jordan over Fractions; returns (det, inverse or None)."""
    n = len(M)
    A = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    det = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if A[i][col] != 0), None)
        if pivot is None:
            return Fraction(0), None
        if pivot != col:
            A[col], A[pivot] = A[pivot], A[col]
            det = -det
        p = A[col][col]
        det *= p
        A[col] = [x / p for x in A[col]]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[col])]
    return det, [row[n:] for row in A]


def all_tuples(value_sets: Sequence[Sequence]) -> Iterator[tuple]:
    return itertools.product(*value_sets)
