import numpy as np
import pytest

from arng import kernels

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20180301)


def markov_bits(n, p11, p1, seed):
    """Two-state chain with P(1|1) = p11 and stationary P(1) = p1."""
    p01 = p1 * (1 - p11) / (1 - p1)
    u = np.random.default_rng(seed).random(n)
    out = np.empty(n, dtype=np.uint8)
    prev = u[0] < p1
    out[0] = prev
    for i in range(1, n):
        prev = u[i] < (p11 if prev else p01)
        out[i] = prev
    return out


def binary_entropy(p):
    return -(p * np.log2(p) + (1 - p) * np.log2(1 - p))


def markov_chain_mi(p11, p1):
    """Closed form I(X_t; X_{t+1}) = H(X) - H(X_{t+1} | X_t) for the chain."""
    p01 = p1 * (1 - p11) / (1 - p1)
    return binary_entropy(p1) - ((1 - p1) * binary_entropy(p01) + p1 * binary_entropy(p11))


# ---------------------------------------------------------------- acceptance reporting

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def accept(request):
    """Record one acceptance criterion: ``accept(n, ok, detail)`` prints and asserts."""
    recorded = []

    def check(number, ok, detail):
        ok = bool(ok)
        line = f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_RESULTS[number] = line
        recorded.append(number)
        print(line)
        assert ok, line

    yield check
    if not recorded:
        number = getattr(request.function, "criterion", request.node.name)
        ACCEPTANCE_RESULTS[number] = f"ACCEPTANCE {number:>2}: FAIL  (errored before reporting)"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (not isinstance(k, int), str(k).zfill(4))):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
