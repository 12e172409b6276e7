"""Exact cubical homology on tiny nerves, used to cross-check ledger certificates."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError

MAX_FACES = 12
MAX_DIM = 3


def face_boundary(key):
    """Signed boundary ``{face_key: coefficient}`` of a rectangular face."""
    I_1, I_01 = key
    out = {}
    for j, i in enumerate(I_01):
        rest = I_01[:j] + I_01[j + 1:]
        sign = -1 if j % 2 else 1
        up = (tuple(sorted(I_1 + (i,))), rest)
        down = (I_1, rest)
        out[up] = out.get(up, 0) + sign
        out[down] = out.get(down, 0) - sign
    return {k: v for k, v in out.items() if v}


def boundary_matrix(faces, d):
    """Integer matrix of the boundary map from d-faces to (d-1)-faces."""
    rows = sorted(k for k in faces if len(k[1]) == d - 1)
    cols = sorted(k for k in faces if len(k[1]) == d)
    pos = {k: r for r, k in enumerate(rows)}
    A = [[0] * len(cols) for _ in rows]
    for c, key in enumerate(cols):
        for f, v in face_boundary(key).items():
            if f not in pos:
                raise InputError(f"face {f} of {key} missing; complex is not closed")
            A[pos[f]][c] += v
    return A, rows, cols


def smith_normal_form(A):
    """Return ``(D, U)`` with ``U A V = D`` diagonal; only the row transform is kept."""
    A = [list(r) for r in A]
    m = len(A)
    n = len(A[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def add_row(src, dst, q):  # row_dst -= q row_src
        A[dst] = [a - q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a - q * b for a, b in zip(U[dst], U[src])]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]

    def add_col(src, dst, q):
        for r in A:
            r[dst] -= q * r[src]

    t = 0
    while t < min(m, n):
        nz = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    add_row(t, i, q)
                    if A[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    add_col(t, j, q)
                    if A[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                            if A[i][j] % A[t][t]), None)
                if bad is None:
                    break
                add_row(bad[0], t, -1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    diag = [A[i][i] for i in range(min(m, n)) if A[i][i]]
    return diag, U


@dataclass
class OracleVerdict:
    is_cycle: bool
    bounds: bool
    betti: int
    torsion: list

    @property
    def nontrivial(self):
        return self.is_cycle and not self.bounds


def _apply(A, x):
    return [sum(a * b for a, b in zip(row, x)) for row in A]


def smallcase_cubical_oracle(faces, chain, n):
    """Decide whether an integer n-chain is a cycle and whether it bounds.

    ``faces`` is a collection of face keys (or a nerve); ``chain`` maps n-face
    keys to integer coefficients.
    """
    keys = set(getattr(faces, "faces", faces))
    if len(keys) > MAX_FACES or any(len(k[1]) > MAX_DIM for k in keys):
        raise InputError(f"oracle limited to {MAX_FACES} faces of dimension <= {MAX_DIM}")
    for k, c in chain.items():
        if k not in keys or len(k[1]) != n:
            raise InputError(f"chain term {k} is not an {n}-face of the complex")
        if int(c) != c:
            raise InputError("chain coefficients must be integers")
    A_n, _, cols_n = boundary_matrix(keys, n)
    A_up, _, cols_up = boundary_matrix(keys, n + 1)
    x = [int(chain.get(k, 0)) for k in cols_n]
    is_cycle = (not A_n) or all(v == 0 for v in _apply(A_n, x)) if n > 0 else True

    diag_up, U = smith_normal_form(A_up) if cols_up else ([], [[int(i == j) for j in range(len(cols_n))]
                                                              for i in range(len(cols_n))])
    y = _apply(U, x) if U else []
    r = len(diag_up)
    bounds = all(y[i] % diag_up[i] == 0 for i in range(r)) and all(v == 0 for v in y[r:])

    rank_n = len(smith_normal_form(A_n)[0]) if (n > 0 and A_n and cols_n) else 0
    betti = len(cols_n) - rank_n - r
    torsion = [d for d in diag_up if d > 1]
    return OracleVerdict(bool(is_cycle), bool(bounds), betti, torsion)


def chain_star_masses(faces, chain):
    """``u(F) = sum over G in Star(F) of |c_G| vol(G)`` for an explicit cubical chain."""
    from .nerve import in_star

    faces = getattr(faces, "faces", faces)
    u = {}
    for key, F in faces.items():
        u[key] = float(sum(abs(c) * faces[g].volume for g, c in chain.items()
                           if c and in_star(F, faces[g])))
    return u
