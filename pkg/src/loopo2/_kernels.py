"""Compiled inner loops: union-find over face indices and cluster counting."""
import numpy as np
from numba import njit


@njit(cache=True)
def uf_find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def uf_union(parent, a, b):
    ra = uf_find(parent, a)
    rb = uf_find(parent, b)
    if ra != rb:
        if ra < rb:
            parent[rb] = ra
        else:
            parent[ra] = rb


@njit(cache=True)
def theta_parent(red, edges, extra):
    """Union-find forest of theta(red) plus the forced ``extra`` unions."""
    n = red.shape[0]
    parent = np.arange(n)
    for e in range(edges.shape[0]):
        i = edges[e, 0]
        j = edges[e, 1]
        if red[i] != red[j]:
            uf_union(parent, i, j)
    for e in range(extra.shape[0]):
        uf_union(parent, extra[e, 0], extra[e, 1])
    return parent


@njit(cache=True)
def free_blue_components(red, edges, extra, blue_pin):
    """Number of theta-components whose blue colour is not forced.

    Returns -1 when two pinned blue values meet in one component, i.e. when no
    coherent blue completion exists.
    """
    n = red.shape[0]
    parent = theta_parent(red, edges, extra)
    colour = np.zeros(n, dtype=np.int8)
    for i in range(n):
        if blue_pin[i] != 0:
            r = uf_find(parent, i)
            if colour[r] == 0:
                colour[r] = blue_pin[i]
            elif colour[r] != blue_pin[i]:
                return -1
    count = 0
    for i in range(n):
        if uf_find(parent, i) == i and colour[i] == 0:
            count += 1
    return count


@njit(cache=True)
def free_blue_components_batch(reds, edges, extra, blue_pin):
    out = np.empty(reds.shape[0], dtype=np.int64)
    for s in range(reds.shape[0]):
        out[s] = free_blue_components(reds[s], edges, extra, blue_pin)
    return out


@njit(cache=True)
def bits_to_spins(mask, free_idx, base, out):
    for b in range(free_idx.shape[0]):
        out[free_idx[b]] = 1 if (mask >> b) & 1 else -1


@njit(cache=True)
def components_over_masks(free_idx, base, edges, extra, blue_pin):
    """free_blue_components for every assignment of the ``free_idx`` faces.

    Bit ``b`` of the mask is the red spin of ``free_idx[b]`` (1 = p).
    """
    nf = free_idx.shape[0]
    total = 1 << nf
    out = np.empty(total, dtype=np.int64)
    red = base.copy()
    for mask in range(total):
        bits_to_spins(mask, free_idx, base, red)
        out[mask] = free_blue_components(red, edges, extra, blue_pin)
    return out


@njit(cache=True)
def fkg_violations(kvals, nfree, max_report):
    """Scan every face pair (u, v) and configuration of the others.

    ``kvals[mask]`` is the exponent of the weight (``-1`` marks zero weight).
    Returns (number of checked cases, number of violations, first violations as
    rows ``mask, u, v``).
    """
    found = np.zeros((max_report, 3), dtype=np.int64)
    nviol = 0
    ncase = 0
    total = 1 << nfree
    for u in range(nfree):
        for v in range(u + 1, nfree):
            bu = 1 << u
            bv = 1 << v
            for mask in range(total):
                if mask & bu or mask & bv:
                    continue
                kpp = kvals[mask | bu | bv]
                kmm = kvals[mask]
                kpm = kvals[mask | bu]
                kmp = kvals[mask | bv]
                ncase += 1
                # lattice condition nu(pp) nu(mm) >= nu(pm) nu(mp), zero weights allowed
                left_zero = kpp < 0 or kmm < 0
                right_zero = kpm < 0 or kmp < 0
                bad = False
                if left_zero:
                    bad = not right_zero
                elif not right_zero:
                    bad = kpp + kmm - kpm - kmp < 0
                if bad:
                    if nviol < max_report:
                        found[nviol, 0] = mask
                        found[nviol, 1] = u
                        found[nviol, 2] = v
                    nviol += 1
    return ncase, nviol, found[: min(nviol, max_report)]
