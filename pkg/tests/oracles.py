"""Slow, loop-based reference implementations used only as test oracles."""
import math

import numpy as np


def brute_neighbors(img, K, zero_pad=False):
    """Per pixel list of (linear index or 'pad', distance) by explicit window scan."""
    H, W, C = img.shape
    r = K // 2
    out = []
    for y in range(H):
        for x in range(W):
            cands = []
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < H and 0 <= xx < W:
                        col = img[yy, xx]
                        key = yy * W + xx
                    elif zero_pad:
                        col = np.zeros(C)
                        key = H * W
                    else:
                        continue
                    d = math.sqrt(sum((float(img[y, x, c]) - float(col[c])) ** 2 for c in range(C)))
                    cands.append((d, len(cands), key))
            cands.sort()
            out.append([(k, d) for d, _, k in cands[:K]])
    return out


def brute_ddc(alpha, lists, reference=True):
    flat = list(np.asarray(alpha).ravel()) + [0.0]
    total, count = 0.0, 0
    for i, lst in enumerate(lists):
        for j, d in lst:
            total += abs(flat[i] - flat[j] - d)
            count += 1
    return total / (count if reference else len(lists))


def brute_dc(alpha, lists, reference=True):
    flat = list(np.asarray(alpha).ravel()) + [0.0]
    total, count = 0.0, 0
    for i, lst in enumerate(lists):
        for j, d in lst:
            total += abs(abs(flat[i] - flat[j]) - d)
            count += 1
    return total / (count if reference else len(lists))


def brute_affinity(alpha, lists, channels):
    flat = list(np.asarray(alpha).ravel()) + [0.0]
    total = 0.0
    for i, lst in enumerate(lists):
        raw = [1.0 - d / math.sqrt(channels) for _, d in lst]
        s = sum(raw)
        pred = sum(w / s * flat[j] for w, (j, _) in zip(raw, lst))
        total += abs(pred - flat[i])
    return total / len(lists)


def central_difference(f, a, h=1e-5):
    a = np.array(a, dtype=float)
    g = np.zeros_like(a)
    for pos in np.ndindex(a.shape):
        old = a[pos]
        a[pos] = old + h
        up = f(a)
        a[pos] = old - h
        dn = f(a)
        a[pos] = old
        g[pos] = (up - dn) / (2 * h)
    return g


def brute_pixel_metrics(p, g, region=None):
    p, g = np.asarray(p).ravel().tolist(), np.asarray(g).ravel().tolist()
    sel = [True] * len(p) if region is None else np.asarray(region).ravel().tolist()
    ad = [abs(a - b) for a, b, s in zip(p, g, sel) if s]
    sq = [(a - b) ** 2 for a, b, s in zip(p, g, sel) if s]
    return {"sad": math.fsum(ad) / 1000.0, "mad": math.fsum(ad) / len(ad), "mse": math.fsum(sq) / len(sq)}


def _components(mask):
    """4-connected components by flood fill; returned in order of first pixel (raster)."""
    H, W = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for y in range(H):
        for x in range(W):
            if mask[y, x] and not seen[y, x]:
                stack, comp = [(y, x)], []
                seen[y, x] = True
                while stack:
                    cy, cx = stack.pop()
                    comp.append((cy, cx))
                    for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                        if 0 <= ny < H and 0 <= nx < W and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
                comps.append(comp)
    return comps


def brute_conn(p, g, step=0.1, theta=0.15):
    p, g = np.asarray(p, dtype=float), np.asarray(g, dtype=float)
    level = np.zeros(p.shape)
    n = int(round(1 / step))
    for k in range(1, n + 1):
        th = k / n
        comps = _components((p >= th) & (g >= th))
        if not comps:
            continue
        best = comps[0]
        for c in comps[1:]:
            if len(c) > len(best):
                best = c
        for y, x in best:
            level[y, x] = th
    terms = []
    for y in range(p.shape[0]):
        for x in range(p.shape[1]):
            dp, dg = p[y, x] - level[y, x], g[y, x] - level[y, x]
            fp = 1 - dp if dp >= theta else 1.0
            fg = 1 - dg if dg >= theta else 1.0
            terms.append(abs(fp - fg))
    return math.fsum(terms) / 1000.0


def gaussian_derivative_kernels(sigma=1.4):
    r = int(math.ceil(3 * sigma))
    x = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-x**2 / (2 * sigma**2))
    g /= g.sum()
    dg = -x / sigma**2 * g
    return g, dg, r


def direct_grad_metric(p, g, sigma=1.4):
    """2-D direct correlation with the separable derivative kernel, reflect border."""
    gk, dk, r = gaussian_derivative_kernels(sigma)
    kx = np.outer(gk, dk)  # d/dx varies along columns
    ky = np.outer(dk, gk)

    def mag(a):
        H, W = a.shape
        # 'reflect' in the half-sample sense: d c b a | a b c d
        pad = np.pad(a, r, mode="symmetric")
        gx = np.zeros_like(a)
        gy = np.zeros_like(a)
        for y in range(H):
            for x in range(W):
                win = pad[y : y + 2 * r + 1, x : x + 2 * r + 1]
                # convolution flips the kernel
                gx[y, x] = np.sum(win * kx[::-1, ::-1])
                gy[y, x] = np.sum(win * ky[::-1, ::-1])
        return np.sqrt(gx**2 + gy**2)

    return float(np.sum((mag(np.asarray(p, float)) - mag(np.asarray(g, float))) ** 2) / 1000.0)


def brute_erode(mask, k):
    H, W = mask.shape
    r = k // 2
    out = np.zeros_like(mask, dtype=bool)
    for y in range(H):
        for x in range(W):
            ok = True
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < H and 0 <= xx < W and not mask[yy, xx]:
                        ok = False
            out[y, x] = ok
    return out


def lp_known_ddc(image, trimap, field, lam=10.0):
    """Exact minimum of L1 known + lam * reference-normalized DDC as a linear program."""
    from scipy import sparse
    from scipy.optimize import linprog

    n = trimap.n_pixels
    sel = field.mask.ravel()
    rows = np.repeat(np.arange(n), field.index.shape[1])[sel]
    cols = field.index.ravel()[sel]
    d = field.distance.ravel()[sel]
    m = rows.size
    kn = np.flatnonzero(trimap.known.ravel())
    t = trimap.labels.ravel()[kn]
    nk = kn.size
    # variables: alpha (n), known slacks (nk), term slacks (m)
    c = np.concatenate([np.zeros(n), np.full(nk, 1.0 / nk), np.full(m, lam / m)])
    S = sparse.identity(n, format="csr")[kn]
    D = sparse.csr_matrix((np.ones(m), (np.arange(m), rows)), shape=(m, n)) - sparse.csr_matrix(
        (np.ones(m), (np.arange(m), cols)), shape=(m, n)
    )
    Zk = sparse.csr_matrix((nk, m))
    Zm = sparse.csr_matrix((m, nk))
    Ik, Im = sparse.identity(nk), sparse.identity(m)
    A = sparse.vstack(
        [
            sparse.hstack([S, -Ik, Zk]),
            sparse.hstack([-S, -Ik, Zk]),
            sparse.hstack([D, Zm, -Im]),
            sparse.hstack([-D, Zm, -Im]),
        ]
    ).tocsr()
    b = np.concatenate([t, -t, d, -d])
    bounds = [(0, 1)] * n + [(0, None)] * (nk + m)
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    assert res.success
    return res.fun, res.x[:n].reshape(trimap.shape)
