"""Pure numpy implementations of the hot kernels.

Same contract as the compiled ``_kernels`` module; used when the
extension is not built or ``PSOS_PURE_PYTHON`` is set.
"""

import numpy as np

_MAX_STEP = 10.0
_BACKTRACK = 30


def _evaluate(H, W, k):
    """Return ``G = H - k F(H)`` and the per-row softmax tensor ``S``."""
    n, m = H.shape
    hext = np.concatenate([H, np.zeros((n, 1))], axis=1)
    A = W[None, :, :] + hext[:, None, :]
    top = A.max(axis=2, keepdims=True)
    E = np.exp(A - top)
    acc = E.sum(axis=2, keepdims=True)
    S = E / acc
    lse = (top + np.log(acc))[:, :, 0]
    G = H - k * (lse[:, :m] - lse[:, m:])
    return G, S


def _norm(G):
    out = np.abs(G).max(axis=1)
    out[~np.isfinite(out)] = np.inf
    return out


def multistart(H0, W, k, damping, max_iter, newton_iter, tol, newton_tol=0.0):
    """Damped iteration ``h <- h - damping (h - k F(h))`` then Newton, per start.

    Parameters
    ----------
    H0 : (n, m) array
        Starting points in log space.
    W : (m + 1, m + 1) array
        Log coupling weights ``|i - j|**p * ln(theta)``.
    k : float
        Tree order.
    damping : float
        Step of the damped iteration, in ``(0, 1]``.
    max_iter, newton_iter : int
        Iteration budgets; ``max_iter = 0`` runs Newton from the start directly.
    tol : float
        Max-norm of ``h - k F(h)`` that ends the damped phase.
    newton_tol : float
        Newton stops once the max-norm drops to this value.

    Returns
    -------
    H : (n, m) array
        Final points.
    norm : (n,) array
        Max-norm of ``h - k F(h)`` at the final points.
    """
    H = np.array(H0, dtype=float, copy=True)
    W = np.asarray(W, dtype=float)
    n, m = H.shape

    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        G, _ = _evaluate(H[active], W, k)
        nrm = _norm(G)
        idx = np.flatnonzero(active)
        done = nrm < tol
        step = idx[~done]
        H[step] -= damping * G[~done]
        active[idx[done]] = False

    G, S = _evaluate(H, W, k)
    norm = _norm(G)
    active = norm > newton_tol
    eye = np.eye(m)
    for _ in range(newton_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ga, Sa = G[idx], S[idx]
        J = eye[None] - k * (Sa[:, :m, :m] - Sa[:, m:, :m])
        ok = np.isfinite(J).all(axis=(1, 2)) & (np.abs(np.linalg.det(J)) > 0)
        delta = np.zeros_like(Ga)
        if ok.any():
            delta[ok] = np.linalg.solve(J[ok], -Ga[ok][:, :, None])[:, :, 0]
        big = np.abs(delta).max(axis=1)
        ok &= np.isfinite(big)
        big[~ok] = 1.0
        delta[~ok] = 0.0
        scale = np.where(big > _MAX_STEP, _MAX_STEP / np.maximum(big, _MAX_STEP), 1.0)
        delta *= scale[:, None]

        accepted = np.zeros(len(idx), dtype=bool)
        alpha = 1.0
        pending = ok.copy()
        for _ in range(_BACKTRACK):
            if not pending.any():
                break
            sel = np.flatnonzero(pending)
            trial = H[idx[sel]] + alpha * delta[sel]
            Gt, St = _evaluate(trial, W, k)
            nt = _norm(Gt)
            better = nt < norm[idx[sel]]
            good = sel[better]
            H[idx[good]] = trial[better]
            G[idx[good]] = Gt[better]
            S[idx[good]] = St[better]
            norm[idx[good]] = nt[better]
            accepted[good] = True
            pending[good] = False
            alpha *= 0.5
        stalled = ~accepted
        active[idx[stalled]] = False
        active &= norm > newton_tol
    return H, norm


def _grid_points(n):
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    keep = i + j <= n - 1
    t = i[keep] / (n - 1.0)
    u = j[keep] / (n - 1.0)
    mid = np.clip(1.0 - t - u, 0.0, None)
    mid[i[keep] + j[keep] == n - 1] = 0.0
    r = np.linspace(0.0, 1.0, n * n)
    zero = np.zeros_like(r)
    ts = np.concatenate([t, r, zero, r])
    us = np.concatenate([u, zero, r, 1.0 - r])
    ms = np.concatenate([mid, 1.0 - r, 1.0 - r, zero])
    return ts, ms, us


def _softmax3(a0, a1, a2):
    top = np.maximum(np.maximum(a0, a1), a2)
    e0, e1, e2 = np.exp(a0 - top), np.exp(a1 - top), np.exp(a2 - top)
    s = e0 + e1 + e2
    return e0 / s, e1 / s, e2 / s


def gamma_grid_max(lx2, ly2, lt, lT, n):
    """Max of ``|f|, |phi|, |psi|, |g|`` over the probability simplex.

    The grid is the ``n x n`` triangle ``t + u <= 1`` plus its three
    edges sampled at ``n**2`` points each.  Arguments are ``2 ln x``,
    ``2 ln y``, ``ln theta`` and ``2**p ln theta``.
    """
    t, mid, u = _grid_points(n)
    with np.errstate(divide="ignore"):
        la, lb, lc = np.log(t), np.log(mid), np.log(u)
    P00, P01, P02 = _softmax3(lx2 + la, lt + ly2 + lb, lT + lc)
    P10, P11, P12 = _softmax3(lt + lx2 + la, ly2 + lb, lt + lc)
    P20, P21, P22 = _softmax3(lT + lx2 + la, lt + ly2 + lb, lc)
    return (
        float(np.abs(P00 - P20).max()),
        float(np.abs(P00 - P10).max()),
        float(np.abs(P11 - P01).max()),
        float(np.abs(P22 - P02).max()),
    )
