"""Pure-Python/numpy implementations of the hot loops.

Every function here has a twin with the same signature and the same
results in the compiled ``_kernels`` extension.
"""

import math

import numpy as np

_BLOCK = 256


def relation_accuracy(dsrc, ddst, src, dst, start, stop):
    """Max of |ddst[dst[i], dst[j]] - dsrc[src[i], src[j]]| over i in [start, stop), all j."""
    best = 0.0
    for i0 in range(start, stop, _BLOCK):
        i1 = min(i0 + _BLOCK, stop)
        block = np.abs(ddst[np.ix_(dst[i0:i1], dst)] - dsrc[np.ix_(src[i0:i1], src)])
        if block.size:
            best = max(best, float(block.max()))
    return best


def directed_hausdorff(da, db, a1, b1, a2, b2, wa, start, stop):
    """Max over i in [start, stop) of min over j of wa*da[a1[i], a2[j]] + db[b1[i], b2[j]]."""
    best = 0.0
    for i0 in range(start, stop, _BLOCK):
        i1 = min(i0 + _BLOCK, stop)
        cost = wa * da[np.ix_(a1[i0:i1], a2)] + db[np.ix_(b1[i0:i1], b2)]
        if cost.size:
            best = max(best, float(cost.min(axis=1).max()))
    return best


def subset_diameters(dy):
    """internal[mask] = max distance between two members of the pixel subset ``mask``."""
    m = dy.shape[0]
    nsub = 1 << m
    internal = np.zeros(nsub)
    for mask in range(1, nsub):
        low = mask & -mask
        yl = low.bit_length() - 1
        rest = mask ^ low
        v = internal[rest]
        r = rest
        while r:
            b = r & -r
            y = b.bit_length() - 1
            if dy[yl, y] > v:
                v = dy[yl, y]
            r ^= b
        internal[mask] = v
    return internal


def bnb_search(dx, dy, order, incumbent, budget):
    """Branch and bound over correspondences, see ``gromov_hausdorff.gh_exact``.

    Returns ``(best, masks, nodes, complete)`` where ``masks[x]`` is the pixel
    bitmask of point ``x`` in the best correspondence strictly below
    ``incumbent`` (``None`` if none was found).
    """
    dx = np.ascontiguousarray(dx, dtype=float)
    dy = np.ascontiguousarray(dy, dtype=float)
    order = [int(o) for o in order]
    n = len(order)
    m = dy.shape[0]
    full = (1 << m) - 1
    nsub = 1 << m
    internal = subset_diameters(dy)
    lowbit = [0] * nsub
    for mask in range(1, nsub):
        lowbit[mask] = (mask & -mask).bit_length() - 1
    popy = [[y for y in range(m) if mask >> y & 1] for mask in range(nsub)]

    st = {"best": float(incumbent), "masks": None, "nodes": 0, "complete": True}
    masks = [0] * dx.shape[0]
    px, py = [], []

    def rec(depth, partial, covered):
        if depth == n:
            if covered == full and partial < st["best"]:
                st["best"] = partial
                st["masks"] = list(masks)
            return
        rest = order[depth:]
        if px:
            c = np.abs(dy[:, py][None, :, :] - dx[np.ix_(rest, px)][:, None, :]).max(axis=2)
        else:
            c = np.zeros((len(rest), m))
        bound = max(partial, float(c.min(axis=1).max()))
        uncovered = [y for y in range(m) if not (covered >> y & 1)]
        if uncovered:
            bound = max(bound, float(c[:, uncovered].min(axis=0).max()))
        if bound >= st["best"]:
            return
        cost = c[0]
        last = len(rest) == 1
        sub = [0.0] * nsub
        cands = []
        best = st["best"]
        for mask in range(1, nsub):
            yl = lowbit[mask]
            sc = sub[mask ^ (1 << yl)]
            if cost[yl] > sc:
                sc = float(cost[yl])
            sub[mask] = sc
            v = max(sc, float(internal[mask]), partial)
            if v >= best:
                continue
            if last and (covered | mask) != full:
                continue
            cands.append((v, mask))
        cands.sort()
        x = order[depth]
        for v, mask in cands:
            if v >= st["best"]:
                break
            if st["nodes"] >= budget:
                st["complete"] = False
                return
            st["nodes"] += 1
            masks[x] = mask
            ys = popy[mask]
            px.extend([x] * len(ys))
            py.extend(ys)
            rec(depth + 1, v, covered | mask)
            del px[-len(ys):]
            del py[-len(ys):]
            if not st["complete"]:
                return

    rec(0, 0.0, 0)
    return st["best"], st["masks"], st["nodes"], st["complete"]


INF = math.inf
