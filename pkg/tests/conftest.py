import zlib

import numpy as np
import pytest


def philox(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, lo=0.05, hi=5.0):
    """Random positive definite matrix with spectrum log-uniform in [lo, hi]."""
    lam = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))
    q = random_orthogonal(rng, n)
    return (q * lam) @ q.T


def random_density(rng, n, rotate=True):
    e = rng.exponential(size=n)
    lam = e / e.sum()
    if not rotate:
        return np.diag(lam)
    q = random_orthogonal(rng, n)
    d = (q * lam) @ q.T
    return 0.5 * (d + d.T) / np.trace(d)


def random_sym(rng, n):
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def random_traceless(rng, n):
    a = random_sym(rng, n)
    return a - np.trace(a) / n * np.eye(n)


def rel(a, b, floor=1e-300):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


@pytest.fixture
def rng(request):
    # per-test stream, stable across runs and independent of test order
    return philox(zlib.crc32(request.node.name.encode()))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
