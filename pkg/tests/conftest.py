import json

import numpy as np
import pytest

from app.main import run
from app.services.matrix_core import TruncatedSvd, truncated_svd
from app.storage import write_matrix
from app.utils.rng import child_rng


def make_pair(p: int, q: int, r: int, seed: int = 0, sigma0: float = 0.3, sigma1: float = 0.1):
    """
    Target and source matrices sharing their rank-r latent spaces.

    Returns:
        (theta0, Y0, Y1): the target signal and the noisy target and source
    """
    rng = child_rng(seed)
    U = np.linalg.qr(rng.standard_normal((p, r)))[0]
    V = np.linalg.qr(rng.standard_normal((q, r)))[0]
    scale = np.sqrt(p * q)
    theta0 = (U * np.linspace(2.0, 1.0, r) * scale ** 0.5) @ V.T
    theta1 = (U * np.linspace(1.0, 2.0, r) * scale ** 0.5) @ V.T
    Y0 = theta0 + sigma0 * rng.standard_normal((p, q))
    Y1 = theta1 + sigma1 * rng.standard_normal((p, q))
    return theta0, Y0, Y1


@pytest.fixture
def rng() -> np.random.Generator:
    return child_rng(12345)


@pytest.fixture
def small_pair():
    """30×8 rank-3 target/source pair."""
    return make_pair(30, 8, 3, seed=1)


@pytest.fixture
def small_source(small_pair) -> TruncatedSvd:
    _, _, Y1 = small_pair
    return truncated_svd(Y1, 3)


@pytest.fixture
def matrix_files(tmp_path, small_pair):
    """The small pair written to Y0.csv and Y1.csv."""
    _, Y0, Y1 = small_pair
    write_matrix(Y0, tmp_path / "Y0.csv")
    write_matrix(Y1, tmp_path / "Y1.csv")
    return tmp_path / "Y0.csv", tmp_path / "Y1.csv"


@pytest.fixture
def cli(capsys):
    """Run the command line; return (exit code, stdout JSON or None, stderr JSON or None)."""

    def invoke(*argv: str):
        code = run([str(a) for a in argv])
        captured = capsys.readouterr()
        out = json.loads(captured.out) if captured.out.strip() else None
        err_lines = [line for line in captured.err.splitlines() if line.startswith("{")]
        err = json.loads(err_lines[-1]) if err_lines else None
        return code, out, err

    return invoke
