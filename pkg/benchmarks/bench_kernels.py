"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both implementations are called directly on the same pre-drawn batches, so
the comparison covers only the inner loops. The first numba call (JIT
compilation) is excluded. Outputs are checked for agreement before timing.
"""

import argparse
import math
import timeit

import numpy as np

from disfone import DesignSpec, generate_problem
from disfone import _kernels as K
from disfone.fone import GUARD_FACTOR, fone_batches


def cases():
    n, p = 100_000, 100
    m = int(p * math.log(n))
    out = []
    for kind in ("logistic", "quantile"):
        pr = generate_problem(kind, DesignSpec(p), n, tau=0.25 if kind == "quantile" else None, seed=1)
        X, y, model = pr.dataset.X, pr.dataset.y, pr.model
        theta0 = pr.theta_star + 0.1
        sgd_batches = np.random.default_rng(2).permutation(n)[: (n // m) * m].reshape(-1, m)
        fone_b = fone_batches(n, m, 100, 3)
        a = np.full(p, 0.01)
        guard = GUARD_FACTOR * (1 + np.linalg.norm(a))
        args = {
            "batch_grad_sum": (model.code, model.tau_value, X, y, np.arange(n), theta0),
            "sgd_loop": (model.code, model.tau_value, X, y, sgd_batches, theta0, 10.0, 1.0, p),
            "fone_loop": (model.code, model.tau_value, X, y, fone_b, theta0, a, 0.05, guard),
        }
        out += [(kind, name, a_) for name, a_ in args.items()]
    return out


def first(result):
    return result[0] if isinstance(result, tuple) else result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if K.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'model':<9} {'kernel':<15} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for kind, name, a in cases():
        fn_np, fn_nb = K.numpy_impl[name], K.numba_impl[name]
        ref, got = first(fn_np(*a)), first(fn_nb(*a))  # also triggers compilation
        if not np.allclose(ref, got, rtol=1e-9, atol=1e-9):
            raise SystemExit(f"{kind}/{name}: backends disagree")
        t_np = min(timeit.repeat(lambda: fn_np(*a), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn_nb(*a), number=1, repeat=args.repeat))
        print(f"{kind:<9} {name:<15} {1e3 * t_np:>10.1f} {1e3 * t_nb:>10.1f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
