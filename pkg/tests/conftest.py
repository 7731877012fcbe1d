import os
from pathlib import Path

import numpy as np
import pytest

from coherent_rbf import collocation as co
from coherent_rbf import domain as dm
from coherent_rbf import dynamics as dy
from coherent_rbf.config import load_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = []


def record(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus_nodes():
    T = dm.torus()
    Y = dm.regular_grid(T, (20, 20))
    interior, boundary = dm.boundary_nodes(T, Y)
    return T, Y, interior, boundary


@pytest.fixture(scope="session")
def std_setup(torus_nodes):
    T, Y, interior, boundary = torus_nodes
    return co.assemble(T, None, Y, interior, boundary, "psi64", 0.4)


@pytest.fixture(scope="session")
def std_map():
    return dy.StandardMap()


@pytest.fixture(scope="session")
def std_config():
    return load_config(CONFIGS / "standard_map.cfg")


@pytest.fixture(scope="session")
def std_result(std_config):
    from coherent_rbf.pipeline import run_pipeline

    return run_pipeline(std_config)


@pytest.fixture(scope="session")
def cylinder_result():
    import warnings

    from coherent_rbf.pipeline import run_pipeline

    cfg = load_config(CONFIGS / "cylinder.cfg")
    with warnings.catch_warnings():
        # C^{-1} on the invariant walls is close to singular by construction
        warnings.simplefilter("ignore", RuntimeWarning)
        return run_pipeline(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def pytest_configure(config):
    os.environ.setdefault("COHERENT_RBF_LOG", "WARNING")
