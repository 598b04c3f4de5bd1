"""Deliberately naive reference implementations used as test oracles.

Nothing here shares code with the package: statistics are computed by
pair counting and explicit enumeration, and the logistic fit goes through
scipy's L-BFGS-B.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize


def auc_pairs(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def pearson_sums(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def cohens_d_loops(a, b):
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    va = sum((v - ma) ** 2 for v in a) / (len(a) - 1)
    vb = sum((v - mb) ** 2 for v in b) / (len(b) - 1)
    pooled = math.sqrt(((len(a) - 1) * va + (len(b) - 1) * vb) / (len(a) + len(b) - 2))
    return (ma - mb) / pooled


def u_pairs(a, b):
    return sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)


def u_exact_p(a, b):
    """Two-sided p by enumerating every split of the pooled sample into groups of the original sizes.

    Midranks come from direct counting; each split's U is its rank sum minus
    the minimum possible rank sum.
    """
    pooled = np.concatenate([np.asarray(a, float), np.asarray(b, float)])
    n, na = pooled.size, len(a)
    ranks = np.array([np.sum(pooled < v) + (np.sum(pooled == v) + 1) / 2 for v in pooled])
    combos = np.array(list(itertools.combinations(range(n), na)), dtype=np.int64)
    u_all = ranks[combos].sum(axis=1) - na * (na + 1) / 2
    u_obs = u_pairs(a, b)
    lo = np.mean(u_all <= u_obs + 1e-9)
    hi = np.mean(u_all >= u_obs - 1e-9)
    return float(min(1.0, 2.0 * min(lo, hi)))


def logistic_oracle_loss(X, y, l2=1.0):
    """Penalised summed log-loss minimised with L-BFGS-B (intercept unpenalised)."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)

    def f(theta):
        w, b = theta[:-1], theta[-1]
        z = X @ w + b
        loss = np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * w @ w
        p = 1.0 / (1.0 + np.exp(-z))
        g = np.append(X.T @ (p - y) + l2 * w, np.sum(p - y))
        return loss, g

    res = minimize(f, np.zeros(X.shape[1] + 1), jac=True, method="L-BFGS-B",
                   options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 10_000})
    return float(res.fun)


def fixed_logistic_instance():
    """The fixed 50 x 3 instance: seed-0 Gaussian features and noisy linear labels."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    y = (X @ np.array([1.5, -2.0, 0.5]) + 0.3 + rng.logistic(size=50) > 0).astype(float)
    return X, y


def random_metric_instance(rng, max_size=20):
    """Group sizes with na + nb <= max_size, values from a coarse grid so ties occur."""
    na = int(rng.integers(2, max_size // 2 + 1))
    nb = int(rng.integers(2, max_size - na + 1))
    a = np.round(rng.normal(rng.uniform(-1, 1), 1, na), 1)
    b = np.round(rng.normal(0, 1, nb), 1)
    return a, b


def rsa_reference(prior_true, s_lit, k, alpha=1.0):
    """Unbounded two-world RSA over the utterance pair {u, not-u}.

    Listener rows are indexed by utterance and columns by world. The
    alternative not-u is read as asserting the opposite world, so its
    listener row is the mirror image of the row for u at every level.
    """
    prior = np.array([1.0 - prior_true, prior_true])
    lis_u = np.array([1.0 - s_lit, s_lit]) * prior
    lis_u /= lis_u.sum()
    for _ in range(k):
        lis = np.vstack([lis_u, lis_u[::-1]])
        util = lis**alpha
        spk_u = util[0] / util.sum(axis=0)  # S(u | w) for w = 0, 1
        lis_u = spk_u * prior
        lis_u /= lis_u.sum()
    return lis_u[1]
