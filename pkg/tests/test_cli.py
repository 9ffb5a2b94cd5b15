import json

import pytest

from sva.cli import (
    EXIT_DEPENDENCE,
    EXIT_OK,
    EXIT_PRECISION,
    EXIT_VALIDATION,
    main,
    parse_config,
)
from sva.errors import ValidationError

HEPTAGON = ["--minpoly", "1,2,-1", "--root", "2"]


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_heptagon_loop_run(tmp_path):
    out = tmp_path / "run"
    code = main(HEPTAGON + ["--steps", "40", "--loop", "--metrics", "--out", str(out)])
    assert code == EXIT_OK
    loop = json.loads((out / "loop.json").read_text())
    assert loop["certified"] and (loop["s"], loop["p"]) == (1, 3)
    assert abs(loop["F"][0]) == 1
    sm = summary(out)
    assert sm["exit_code"] == 0 and sm["loop"]["round_trip"] == {"x0/x2": True, "x1/x2": True}
    for name in ("trace.jsonl", "metrics.csv", "metrics_summary.json"):
        assert (out / name).exists()
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 41


def test_reruns_are_byte_identical(tmp_path):
    args = ["--minpoly", "0,0,13", "--steps", "60", "--loop", "--metrics", "--format", "csv"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    for name in ("trace.csv", "metrics.csv", "metrics_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dependence_exit_codes(tmp_path):
    assert main(["--rational", "1,2,3", "--out", str(tmp_path / "x")]) == EXIT_DEPENDENCE
    out = tmp_path / "y"
    assert main(["--rational", "1,2,3", "--expect-dependence", "--out", str(out)]) == EXIT_OK
    cert = json.loads((out / "dependence.json").read_text())
    assert sum(a * b for a, b in zip(cert["vector"], (1, 2, 3))) == 0
    assert cert["verified"]


def test_precision_exhaustion(tmp_path):
    out = tmp_path / "p"
    code = main(["--decimal", "1,2.351334687720757489500016339956914526916,5.528774813678872141472344773085320589805",
                 "--prec", "64", "--digits", "15", "--out", str(out)])
    assert code == EXIT_PRECISION
    sm = summary(out)
    assert sm["stop_reason"] == "precision" and sm["error_step"] < 5000
    assert (out / "trace.jsonl").exists()


@pytest.mark.parametrize("argv", [
    ["--minpoly", "0,0,8"],
    ["--minpoly", "0,0"],
    ["--rational", "3,2,1"],
    ["--rational", "1,2,x"],
    ["--minpoly", "0,0,13", "--rational", "1,2,3"],
    ["--minpoly", "0,0,13", "--steps", "0"],
    ["--minpoly", "0,0,13", "--digits", "100", "--prec", "64"],
    ["--minpoly", "0,0,13", "--bogus"],
    ["--minpoly", "0,0,2", "--root", "1"],
])
def test_validation_errors(tmp_path, argv):
    out = tmp_path / "v"
    assert main(argv + ["--out", str(out)]) == EXIT_VALIDATION
    assert summary(out)["stop_reason"] == "validation"


def test_config_file(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"minpoly": "1,2,-1", "root": 2, "steps": 12, "rounding": "round", "digits": 15}))
    cfg = parse_config(["--config", str(cfgfile), "--steps", "8"])
    assert cfg.mode == "cubic" and cfg.root == 2 and cfg.steps == 8 and cfg.rounding == "round"
    out = tmp_path / "c"
    assert main(["--config", str(cfgfile), "--out", str(out)]) == EXIT_OK
    first = json.loads((out / "trace.jsonl").read_text().splitlines()[0])
    assert first["ratio10"] == ["1.80193773580484", "3.24697960371747"]


def test_default_horizon():
    assert parse_config(["--minpoly", "0,0,13"]).steps == 5000
    with pytest.raises(ValidationError):
        parse_config([])


def test_prism_flag(tmp_path):
    out = tmp_path / "pr"
    code = main(["--minpoly", "0,0,13", "--steps", "12", "--prism", "4", "--prism-states", "0,5,10",
                 "--out", str(out)])
    assert code == EXIT_OK
    verdicts = json.loads((out / "prism.json").read_text())
    assert [v["s"] for v in verdicts] == [0, 5, 10]
    assert all(v["pass"] for v in verdicts)


def test_default_digits_follow_precision():
    assert parse_config(["--decimal", "1,2,3.5", "--prec", "64"]).digits == 19
    assert parse_config(["--decimal", "1,2,3.5"]).digits == 25
