"""Hot numerical kernels.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version.  The module-level names point at whichever
backend :mod:`recentering._accel` selected; both variants stay reachable
through :data:`IMPLEMENTATIONS` so they can be cross-checked and timed.
"""

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

__all__ = [
    "overlap_gram_1dof",
    "gaussian_weyl_gram",
    "levy_sum",
    "rk4_hamilton",
    "rk4_reparam",
    "apply_site",
    "IMPLEMENTATIONS",
]


# ---------------------------------------------------------------------------
# numpy versions

def _overlap_gram_1dof_np(p, q, omega):
    dp = p[:, None] - p[None, :]
    dq = q[:, None] - q[None, :]
    sp = p[:, None] + p[None, :]
    expo = 0.5j * sp * dq - 0.25 * (dp * dp / omega + omega * dq * dq)
    return np.exp(expo)


def _gaussian_weyl_gram_np(pi, phi, c, d, w):
    # pi, phi: (J, S) configs; c, d: (S,) coefficients; w: scalar cell volume
    dpi = pi[:, None, :] - pi[None, :, :]
    dphi = phi[:, None, :] - phi[None, :, :]
    gauss = -0.25 * (c * dpi * dpi + d * dphi * dphi)
    sympl = 0.5 * (phi[:, None, :] * pi[None, :, :] - pi[:, None, :] * phi[None, :, :])
    expo = w * (gauss.sum(axis=2) + 1j * sympl.sum(axis=2))
    return np.exp(expo)


def _levy_sum_np(x, nodes, weights):
    x = np.asarray(x, dtype=float)
    arg = np.multiply.outer(x, nodes)
    half = np.sin(0.5 * arg)
    re = -2.0 * half * half
    im = np.sin(arg) - arg / (1.0 + nodes * nodes)
    return re @ weights + 1j * (im @ weights)


def _poly_grad(ci, cj, cc, q, p):
    # H(q, p) = sum_k cc[k] q**ci[k] p**cj[k]
    gq = 0.0
    gp = 0.0
    for k in range(cc.shape[0]):
        i = ci[k]
        j = cj[k]
        if i > 0:
            gq += cc[k] * i * q ** (i - 1) * p ** j
        if j > 0:
            gp += cc[k] * j * q ** i * p ** (j - 1)
    return gq, gp


def _trig_eval(c0, a_sin, b_cos, freq, tau):
    # c0 + sum_k a_k sin(k f tau) + b_k cos(k f tau), k = 1, 2, ...
    val = c0
    for k in range(a_sin.shape[0]):
        val += a_sin[k] * np.sin((k + 1) * freq * tau)
    for k in range(b_cos.shape[0]):
        val += b_cos[k] * np.cos((k + 1) * freq * tau)
    return val


def _make_rk4_hamilton(grad):
    def rk4_hamilton(ci, cj, cc, q0, p0, t0, h, nsteps):
        out = np.empty((nsteps + 1, 3))
        q = q0
        p = p0
        out[0, 0] = t0
        out[0, 1] = q
        out[0, 2] = p
        for i in range(nsteps):
            gq, gp = grad(ci, cj, cc, q, p)
            k1q, k1p = gp, -gq
            gq, gp = grad(ci, cj, cc, q + 0.5 * h * k1q, p + 0.5 * h * k1p)
            k2q, k2p = gp, -gq
            gq, gp = grad(ci, cj, cc, q + 0.5 * h * k2q, p + 0.5 * h * k2p)
            k3q, k3p = gp, -gq
            gq, gp = grad(ci, cj, cc, q + h * k3q, p + h * k3p)
            k4q, k4p = gp, -gq
            q = q + h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
            p = p + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
            out[i + 1, 0] = t0 + (i + 1) * h
            out[i + 1, 1] = q
            out[i + 1, 2] = p
        return out
    return rk4_hamilton


def _make_rk4_reparam(grad, trig):
    def rk4_reparam(ci, cj, cc, c0, a_sin, b_cos, freq, q0, p0, t0, s0, tau0, h, nsteps):
        # state (q, p, t); ds/dtau = 0 so s is carried unchanged
        out = np.empty((nsteps + 1, 5))
        q = q0
        p = p0
        t = t0
        out[0, 0] = tau0
        out[0, 1] = t
        out[0, 2] = q
        out[0, 3] = p
        out[0, 4] = s0
        for i in range(nsteps):
            tau = tau0 + i * h
            l1 = trig(c0, a_sin, b_cos, freq, tau)
            l2 = trig(c0, a_sin, b_cos, freq, tau + 0.5 * h)
            l4 = trig(c0, a_sin, b_cos, freq, tau + h)
            gq, gp = grad(ci, cj, cc, q, p)
            k1q, k1p = l1 * gp, -l1 * gq
            gq, gp = grad(ci, cj, cc, q + 0.5 * h * k1q, p + 0.5 * h * k1p)
            k2q, k2p = l2 * gp, -l2 * gq
            gq, gp = grad(ci, cj, cc, q + 0.5 * h * k2q, p + 0.5 * h * k2p)
            k3q, k3p = l2 * gp, -l2 * gq
            gq, gp = grad(ci, cj, cc, q + h * k3q, p + h * k3p)
            k4q, k4p = l4 * gp, -l4 * gq
            q = q + h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
            p = p + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
            t = t + h * (l1 + 4.0 * l2 + l4) / 6.0
            out[i + 1, 0] = tau0 + (i + 1) * h
            out[i + 1, 1] = t
            out[i + 1, 2] = q
            out[i + 1, 3] = p
            out[i + 1, 4] = s0
        return out
    return rk4_reparam


_rk4_hamilton_py = _make_rk4_hamilton(_poly_grad)
_rk4_reparam_py = _make_rk4_reparam(_poly_grad, _trig_eval)


def _apply_site_np(A, x3):
    return np.einsum("ij,ljr->lir", A, x3)


# ---------------------------------------------------------------------------
# numba versions

if HAVE_NUMBA:
    @njit(cache=True)
    def _overlap_gram_1dof_nb(p, q, omega):
        n = p.shape[0]
        out = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            out[j, j] = 1.0 + 0.0j
            for k in range(j + 1, n):
                dp = p[j] - p[k]
                dq = q[j] - q[k]
                re = -0.25 * (dp * dp / omega + omega * dq * dq)
                im = 0.5 * (p[j] + p[k]) * dq
                val = np.exp(re) * (np.cos(im) + 1j * np.sin(im))
                out[j, k] = val
                out[k, j] = np.conj(val)
        return out

    @njit(cache=True)
    def _gaussian_weyl_gram_nb(pi, phi, c, d, w):
        n, s = pi.shape
        out = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            out[j, j] = 1.0 + 0.0j
            for k in range(j + 1, n):
                re = 0.0
                im = 0.0
                for x in range(s):
                    dpi = pi[j, x] - pi[k, x]
                    dphi = phi[j, x] - phi[k, x]
                    re -= 0.25 * (c[x] * dpi * dpi + d[x] * dphi * dphi)
                    im += 0.5 * (phi[j, x] * pi[k, x] - pi[j, x] * phi[k, x])
                re *= w
                im *= w
                val = np.exp(re) * (np.cos(im) + 1j * np.sin(im))
                out[j, k] = val
                out[k, j] = np.conj(val)
        return out

    @njit(cache=True)
    def _levy_sum_flat_nb(x, nodes, weights):
        out = np.empty(x.shape[0], dtype=np.complex128)
        for i in range(x.shape[0]):
            re = 0.0
            im = 0.0
            for k in range(nodes.shape[0]):
                arg = x[i] * nodes[k]
                half = np.sin(0.5 * arg)
                re += weights[k] * (-2.0 * half * half)
                im += weights[k] * (np.sin(arg) - arg / (1.0 + nodes[k] * nodes[k]))
            out[i] = re + 1j * im
        return out

    def _levy_sum_nb(x, nodes, weights):
        x = np.asarray(x, dtype=float)
        flat = _levy_sum_flat_nb(np.ascontiguousarray(x.ravel()),
                                 np.ascontiguousarray(nodes, dtype=float),
                                 np.ascontiguousarray(weights, dtype=float))
        return flat.reshape(x.shape)

    _poly_grad_nb = njit(cache=True)(_poly_grad)
    _trig_eval_nb = njit(cache=True)(_trig_eval)
    _rk4_hamilton_nb = njit(_make_rk4_hamilton(_poly_grad_nb))
    _rk4_reparam_nb = njit(_make_rk4_reparam(_poly_grad_nb, _trig_eval_nb))

    @njit(cache=True)
    def _apply_site_nb(A, x3):
        nl, d, nr = x3.shape
        out = np.zeros((nl, A.shape[0], nr), dtype=np.complex128)
        for l in range(nl):
            for i in range(A.shape[0]):
                for j in range(d):
                    a = A[i, j]
                    if a == 0:
                        continue
                    for r in range(nr):
                        out[l, i, r] += a * x3[l, j, r]
        return out


IMPLEMENTATIONS = {
    "numpy": {
        "overlap_gram_1dof": _overlap_gram_1dof_np,
        "gaussian_weyl_gram": _gaussian_weyl_gram_np,
        "levy_sum": _levy_sum_np,
        "rk4_hamilton": _rk4_hamilton_py,
        "rk4_reparam": _rk4_reparam_py,
        "apply_site": _apply_site_np,
    },
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "overlap_gram_1dof": _overlap_gram_1dof_nb,
        "gaussian_weyl_gram": _gaussian_weyl_gram_nb,
        "levy_sum": _levy_sum_nb,
        "rk4_hamilton": _rk4_hamilton_nb,
        "rk4_reparam": _rk4_reparam_nb,
        "apply_site": _apply_site_nb,
    }

_active = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]

overlap_gram_1dof = _active["overlap_gram_1dof"]
gaussian_weyl_gram = _active["gaussian_weyl_gram"]
levy_sum = _active["levy_sum"]
rk4_hamilton = _active["rk4_hamilton"]
rk4_reparam = _active["rk4_reparam"]
apply_site = _active["apply_site"]
