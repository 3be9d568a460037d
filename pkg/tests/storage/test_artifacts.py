import json

import pandas as pd

from app.config import settings
from app.storage import write_manifest, write_table
from app.storage.artifacts import library_versions


class TestManifest:
    """manifest.json beside every run's outputs"""

    def test_contents(self, tmp_path):
        outputs = [tmp_path / "theta.csv", tmp_path / "a.csv"]
        path = write_manifest(tmp_path, "fit", {"rank": 3}, outputs, seed=5)
        manifest = json.loads(path.read_text())
        assert path.name == "manifest.json"
        assert manifest["command"] == "fit"
        assert manifest["parameters"] == {"rank": 3}
        assert manifest["seed"] == 5
        assert manifest["outputs"] == ["a.csv", "theta.csv"]
        assert manifest["schema_version"] == settings.SCHEMA_VERSION
        assert "numpy" in manifest["generator"]

    def test_byte_identical_on_rerun(self, tmp_path):
        first = write_manifest(tmp_path / "one", "rank", {"k": 16}, []).read_bytes()
        second = write_manifest(tmp_path / "two", "rank", {"k": 16}, []).read_bytes()
        assert first == second

    def test_versions(self):
        versions = library_versions()
        assert {"python", "numpy", "scipy", "pandas", "joblib", "pydantic"} <= set(versions)


class TestWriteTable:
    def test_shortest_round_trip_floats(self, tmp_path):
        path = write_table(pd.DataFrame({"x": [0.1, 1 / 3]}), tmp_path / "t.csv")
        assert path.read_text() == "x\n0.1\n0.3333333333333333\n"
