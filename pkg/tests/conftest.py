import numpy as np

from ttembed.planning import FactorizationPlan
from ttembed.ttmatrix import TTMatrix


def random_plan(rng, n=None, max_factor=4, max_rank=3, vocab_exact=True):
    """Small random plan for property tests (total size stays tiny)."""
    n = int(rng.integers(2, 5)) if n is None else n
    rows = tuple(int(rng.integers(2, max_factor + 1)) for _ in range(n))
    cols = tuple(int(rng.integers(2, max_factor + 1)) for _ in range(n))
    ranks = tuple(int(rng.integers(1, max_rank + 1)) for _ in range(n - 1))
    requested = int(np.prod(rows)) if vocab_exact else int(rng.integers(1, np.prod(rows) + 1))
    return FactorizationPlan(rows, cols, requested, ranks)


def random_tt_from(rng, plan, std=1.0):
    ranks = (1,) + plan.ranks + (1,)
    cores = [
        rng.normal(0.0, std, size=(ranks[k], plan.row_factors[k], plan.col_factors[k], ranks[k + 1]))
        for k in range(plan.n_cores)
    ]
    return TTMatrix(cores=cores, plan=plan)


def fd_gradient_error(layer, idx, upstream):
    """Worst relative mismatch between analytic and central finite-difference
    gradients; differences under 1e-8 absolute are not scored."""
    buf = layer.backward(idx, upstream)
    if hasattr(layer, "weights"):
        params = layer.weights.cores
    else:
        params = [layer.u, layer.v]

    def total():
        return float(np.sum(layer.forward(idx) * upstream))

    worst = 0.0
    for k, p in enumerate(params):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            mi = it.multi_index
            g0 = p[mi]
            h = 1e-6 * max(1.0, abs(g0))
            p[mi] = g0 + h
            lp = total()
            p[mi] = g0 - h
            lm = total()
            p[mi] = g0
            fd = (lp - lm) / (2.0 * h)
            an = buf.grads[k][mi]
            diff = abs(an - fd)
            if diff > 1e-8:
                worst = max(worst, diff / max(abs(fd), abs(an)))
    return worst
