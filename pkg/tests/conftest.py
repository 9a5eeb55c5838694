import numpy as np
import pytest
from hypothesis import settings

from cgmd.basis import build_basis_from_nodes, build_hybrid_basis
from cgmd.lattice import Harmonic, linearize, uniform_chain

settings.register_profile("cgmd", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("cgmd")


@pytest.fixture
def five_atom():
    """Harmonic 5-atom chain, both ends clamped, single hat node at atom 2."""
    model = uniform_chain(5, Harmonic(1.0))
    basis = build_basis_from_nodes(model, [0, 2, 4], atomistic_start=4)
    return model, basis, linearize(model)


@pytest.fixture
def harmonic32():
    model = uniform_chain(32, Harmonic(1.0))
    basis = build_hybrid_basis(model, 4, 16)
    return model, basis, linearize(model)


@pytest.fixture
def harmonic16():
    model = uniform_chain(16, Harmonic(1.0))
    basis = build_hybrid_basis(model, 3, 9)
    return model, basis, linearize(model)


def random_spd(rng, n, cond=50.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.geomspace(1.0, cond, n)
    return (q * ev) @ q.T


def random_psd(rng, n, rank):
    b = rng.standard_normal((n, rank))
    return b @ b.T


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome == "passed":
                continue
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            number, _, title = props["criterion"].partition(". ")
            title = title.split(" (instance")[0]
            ok = results.get(number, (True, title))[0] and outcome == "passed"
            results[number] = (ok, title)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results, key=int):
        ok, title = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
