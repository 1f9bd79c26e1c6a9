import json
from pathlib import Path

import pytest

from hardymodel.checks import REGISTRY, GeneratorParams
from hardymodel.cli import load_scenario, main, run_scenario
from hardymodel.errors import ScenarioError, UnknownCheck

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def write_scenario(tmp_path, payload, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


BASE = {
    "schema": 1,
    "name": "tiny",
    "seed": 7,
    "regime": "matrix",
    "generator": {"instances": 2, "truncation_degree": 18, "radius_cap": 0.6},
    "checks": ["tuple-validation", "mobius-involution"],
}


class TestLoadScenario:
    def test_roundtrip(self, tmp_path):
        s = load_scenario(write_scenario(tmp_path, BASE))
        assert s.name == "tiny" and s.seed == 7
        assert [c.name for c in s.checks] == ["tuple-validation", "mobius-involution"]

    def test_missing_schema(self, tmp_path):
        bad = dict(BASE)
        del bad["schema"]
        with pytest.raises(ScenarioError):
            load_scenario(write_scenario(tmp_path, bad))

    def test_unknown_check(self, tmp_path):
        bad = dict(BASE)
        bad["checks"] = ["frobnicate"]
        with pytest.raises(UnknownCheck):
            load_scenario(write_scenario(tmp_path, bad))

    def test_unknown_generator_field(self, tmp_path):
        bad = dict(BASE)
        bad["generator"] = {"warp": 9}
        with pytest.raises(ScenarioError):
            load_scenario(write_scenario(tmp_path, bad))

    def test_bad_seed(self, tmp_path):
        bad = dict(BASE)
        bad["seed"] = -1
        with pytest.raises(ScenarioError):
            load_scenario(write_scenario(tmp_path, bad))


class TestRunScenario:
    def test_passes_and_is_deterministic(self, tmp_path):
        path = write_scenario(tmp_path, BASE)
        r1 = run_scenario(path)
        r2 = run_scenario(path)
        assert r1["overall"] == "pass"
        strip = lambda rep: [
            {k: v for k, v in c.items() if k != "elapsed_ms"} for c in rep["checks"]
        ]
        assert strip(r1) == strip(r2)

    def test_exit_codes(self, tmp_path, capsys):
        path = write_scenario(tmp_path, BASE)
        assert main(["run", str(path), "--quiet"]) == 0
        bad = dict(BASE)
        bad["checks"] = ["frobnicate"]
        badpath = write_scenario(tmp_path, bad, "bad.json")
        assert main(["run", str(badpath)]) == 2

    def test_report_written(self, tmp_path):
        path = write_scenario(tmp_path, BASE)
        out = tmp_path / "report.json"
        assert main(["run", str(path), "--out", str(out), "--quiet"]) == 0
        report = json.loads(out.read_text())
        assert report["overall"] == "pass"
        assert {c["name"] for c in report["checks"]} == set(BASE["checks"])
        for c in report["checks"]:
            assert set(c) == {
                "name",
                "status",
                "residual",
                "tail_bound",
                "safe_cutoff",
                "elapsed_ms",
            }


class TestSkippedChecks:
    def test_size_overflow_marks_skipped(self, tmp_path, monkeypatch):
        # a basis cap too small for the hardy checks turns them into
        # skipped entries; overall still reflects only non-skipped checks
        monkeypatch.setenv("HARDYMODEL_BASIS_CAP", "3")
        scenario = dict(BASE)
        scenario["checks"] = ["kernel-reproduction", "pseudometric"]
        path = write_scenario(tmp_path, scenario)
        report = run_scenario(path)
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["kernel-reproduction"]["status"] == "skipped"
        assert by_name["pseudometric"]["status"] == "pass"
        assert report["overall"] == "pass"


class TestListChecks:
    def test_listing_matches_registry(self, capsys):
        assert main(["list-checks"]) == 0
        out = capsys.readouterr().out
        for name in REGISTRY:
            assert name in out
        assert f"{len(REGISTRY)} checks registered" in out

    def test_every_check_has_anchor(self):
        for spec in REGISTRY.values():
            assert spec.anchor
            assert spec.regime in ("matrix", "hardy", "mixed")


class TestSuite:
    def test_bundled_smoke_scenario(self):
        report = run_scenario(SCENARIOS / "norm-identity-smoke.json")
        assert report["overall"] == "pass"

    def test_suite_over_tmpdir(self, tmp_path):
        write_scenario(tmp_path, BASE, "a.json")
        second = dict(BASE)
        second["name"] = "tiny2"
        second["seed"] = 8
        write_scenario(tmp_path, second, "b.json")
        assert main(["suite", str(tmp_path), "--quiet"]) == 0

    def test_suite_missing_dir(self):
        assert main(["suite", "/nonexistent-dir-xyz"]) == 2


def test_generator_params_from_dict_defaults():
    p = GeneratorParams.from_dict({})
    assert p.instances == 5 and p.dims == (2, 2)
