"""Backend equivalence: the compiled kernels must match the numpy fallback."""
import numpy as np
import pytest

from hpsplit._kernels import BACKEND, _fallback

try:
    from hpsplit._kernels import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(_speedups is None,
                                    reason="compiled kernels not built")


def random_tableau(rng, m=8, n=14):
    T = rng.normal(size=(m + 2, n + 1))
    T[:m, -1] = np.abs(T[:m, -1])
    basis = np.zeros(m, dtype=np.int64)
    for i in range(m):  # plant an identity block so the basis is valid
        col = n - m + i
        T[:, col] = 0.0
        T[i, col] = 1.0
        basis[i] = col
    T[m + 1, :] = T[m, :]
    return np.ascontiguousarray(T), basis


class TestBackendSelection:
    def test_backend_reported(self):
        assert BACKEND in ("compiled", "python")

    def test_env_override(self):
        import subprocess
        import sys
        out = subprocess.run(
            [sys.executable, "-c",
             "from hpsplit._kernels import BACKEND; print(BACKEND)"],
            env={"HPSPLIT_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True)
        assert out.stdout.strip() == "python"


@needs_compiled
class TestSimplexEquivalence:
    def test_same_pivots_same_tableau(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            T1, b1 = random_tableau(rng)
            T2, b2 = T1.copy(), b1.copy()
            m = b1.size
            s1 = _fallback.simplex_iterate(T1, b1, m, m, T1.shape[1] - 1,
                                           1e-9, 1e-9, 500)
            s2 = _speedups.simplex_iterate(T2, b2, m, m, T2.shape[1] - 1,
                                           1e-9, 1e-9, 500)
            assert s1 == s2
            assert np.array_equal(b1, b2)
            assert np.allclose(T1, T2, atol=1e-12, rtol=0)

    def test_full_solves_agree(self):
        import os
        import subprocess
        import sys
        code = (
            "import numpy as np\n"
            "from test_lp import make_random_lp\n"
            "from hpsplit.lp import solve_lp, LPStatus\n"
            "rng = np.random.default_rng(123)\n"
            "out = []\n"
            "for _ in range(60):\n"
            "    lp = make_random_lp(rng)\n"
            "    s = solve_lp(lp)\n"
            "    out.append('inf' if s.status is not LPStatus.OPTIMAL\n"
            "               else repr(round(s.objective_value, 10)))\n"
            "print(';'.join(out))\n")
        results = {}
        for backend in ("0", "1"):
            env = dict(os.environ, HPSPLIT_PURE_PYTHON=backend)
            run = subprocess.run([sys.executable, "-c", code], env=env,
                                 capture_output=True, text=True,
                                 cwd=os.path.dirname(__file__))
            assert run.returncode == 0, run.stderr
            results[backend] = run.stdout.strip()
        assert results["0"] == results["1"]


@needs_compiled
class TestLassoEquivalence:
    def test_fits_agree(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n, k = int(rng.integers(5, 40)), int(rng.integers(1, 6))
            X = np.ascontiguousarray(rng.uniform(size=(n, k)))
            y = np.ascontiguousarray(rng.uniform(size=n))
            lam = float(rng.choice([0.0, 0.001, 0.01, 0.1]))
            w1, b1, s1, c1 = _fallback.lasso_sweeps(X, y, lam, 1e-8, 100000)
            w2, b2, s2, c2 = _speedups.lasso_sweeps(X, y, lam, 1e-8, 100000)
            assert c1 and c2
            assert np.abs(np.asarray(w1) - np.asarray(w2)).max() <= 1e-7
            assert abs(b1 - b2) <= 1e-7
