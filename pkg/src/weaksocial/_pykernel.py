"""Pure-Python (numpy) simulation kernel.

Performs the same floating-point operations in the same order as the compiled
kernel in ``_ckernel.pyx``, so both backends produce bit-identical traces.
"""

import numpy as np

UNDERFLOW = 1e-300


def advance(mu, lik, signals, gamma):
    """One synchronous round.

    Returns ``(new_beliefs, bad_agent)`` where ``bad_agent`` is ``-1`` on
    success or the first agent whose evidence was zero.
    """
    n, m = mu.shape
    agents = np.arange(n)
    obs = lik[agents, :, signals]
    num = mu * obs
    den = num[:, 0].copy()
    for t in range(1, m):
        den += num[:, t]
    active = gamma != 0
    bad = np.flatnonzero(active & (den <= 0))
    if bad.size:
        return None, int(bad[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        post = num / den[:, None]
    g = gamma[:, None]
    psi = np.where(active[:, None], (1 - g) * mu + g * post, mu)
    return psi, -1


def combine(psi, weights):
    n = weights.shape[0]
    acc = np.zeros_like(psi)
    for l in range(n):
        acc += weights[l][:, None] * psi[l][None, :]
    return acc


def clamp_underflow(mu):
    small = mu < UNDERFLOW
    rows = np.flatnonzero(small.any(axis=1))
    for k in rows:
        row = mu[k]
        row[small[k]] = 0.0
        s = row[0]
        for t in range(1, row.shape[0]):
            s += row[t]
        row /= s
    return mu


def run_trial(weights, lik, signals, gamma, mu0, stride):
    """Evolve all agents for ``signals.shape[0]`` steps.

    Parameters
    ----------
    weights : (N, N) float64
    lik : (N, M, Z) float64
    signals : (T, N) int64
    gamma : (T, N) float64
        Self-awareness weights; ones reproduce the plain diffusion update.
    mu0 : (N, M) float64
    stride : int
        Record beliefs at times ``0, stride, 2*stride, ...``.

    Returns
    -------
    out : (T // stride + 1, N, M) float64
    bad_agent, bad_time : int
        ``-1, -1`` on success; otherwise where zero evidence stopped the run.
    """
    steps = signals.shape[0]
    n, m = mu0.shape
    out = np.empty((steps // stride + 1, n, m))
    mu = np.array(mu0, dtype=float, copy=True)
    out[0] = mu
    for i in range(steps):
        psi, bad = advance(mu, lik, signals[i], gamma[i])
        if bad >= 0:
            return out, bad, i + 1
        mu = clamp_underflow(combine(psi, weights))
        if (i + 1) % stride == 0:
            out[(i + 1) // stride] = mu
    return out, -1, -1
