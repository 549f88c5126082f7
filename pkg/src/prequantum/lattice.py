"""Integer lattice normal forms (row Hermite form, Smith invariant factors)."""
from __future__ import annotations

from math import gcd


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def hermite_rows(rows: list[list[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of the Z-span of ``rows``, zero rows dropped.

    Pivots are positive, strictly increasing in column, and entries above a pivot
    are reduced into ``[0, pivot)``; the result is canonical for the lattice.
    """
    if not rows:
        return []
    m = [list(r) for r in rows]
    ncols = len(m[0])
    out: list[list[int]] = []
    col = 0
    while m and col < ncols:
        nz = [r for r in m if r[col] != 0]
        rest = [r for r in m if r[col] == 0]
        if not nz:
            col += 1
            continue
        piv = nz[0]
        for r in nz[1:]:
            g, x, y = xgcd(piv[col], r[col])
            a, b = piv[col] // g, r[col] // g
            new_piv = [x * p + y * q for p, q in zip(piv, r)]
            new_r = [-b * p + a * q for p, q in zip(piv, r)]
            piv = new_piv
            if any(new_r):
                rest.append(new_r)
        if piv[col] < 0:
            piv = [-v for v in piv]
        out.append(piv)
        m = [r for r in rest if any(r)]
        col += 1
    # reduce entries above each pivot
    for i, row in enumerate(out):
        pc = next(j for j, v in enumerate(row) if v)
        for k in range(i):
            q = out[k][pc] // row[pc]
            if q:
                out[k] = [a - q * b for a, b in zip(out[k], row)]
    return out


def in_row_span(basis: list[list[int]], vec: list[int]) -> bool:
    """Exact membership of ``vec`` in the Z-span of a Hermite basis."""
    v = list(vec)
    for row in basis:
        pc = next(j for j, x in enumerate(row) if x)
        if any(v[:pc]):
            return False
        q, r = divmod(v[pc], row[pc])
        if r:
            return False
        v = [a - q * b for a, b in zip(v, row)]
    return not any(v)


def smith_invariants(matrix: list[list[int]]) -> list[int]:
    """Nonzero invariant factors ``d1 | d2 | ...`` of an integer matrix."""
    a = [list(r) for r in matrix if r]
    if not a:
        return []
    nrows, ncols = len(a), len(a[0])
    diag: list[int] = []
    t = 0
    while t < min(nrows, ncols):
        entries = [(abs(a[i][j]), i, j) for i in range(t, nrows) for j in range(t, ncols) if a[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        a[t], a[i] = a[i], a[t]
        for r in a:
            r[t], r[j] = r[j], r[t]
        while True:
            changed = False
            for i in range(t + 1, nrows):
                if a[i][t]:
                    g, x, y = xgcd(a[t][t], a[i][t])
                    p, q = a[t][t] // g, a[i][t] // g
                    rt, ri = a[t], a[i]
                    a[t] = [x * u + y * v for u, v in zip(rt, ri)]
                    a[i] = [-q * u + p * v for u, v in zip(rt, ri)]
                    changed = True
            for j in range(t + 1, ncols):
                if a[t][j]:
                    g, x, y = xgcd(a[t][t], a[t][j])
                    p, q = a[t][t] // g, a[t][j] // g
                    for r in a:
                        u, v = r[t], r[j]
                        r[t], r[j] = x * u + y * v, -q * u + p * v
                    changed = True
            if changed:
                continue
            # enforce divisibility of the remaining block
            bad = next(((i, j) for i in range(t + 1, nrows) for j in range(t + 1, ncols)
                        if a[i][j] % a[t][t]), None)
            if bad is None:
                break
            a[t] = [u + v for u, v in zip(a[t], a[bad[0]])]
        diag.append(abs(a[t][t]))
        t += 1
    return diag


def lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b if a and b else 0
