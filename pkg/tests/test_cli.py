from __future__ import annotations

import json

import pytest

from dtproj.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from dtproj.corpus import ENV_VAR, NAMES, ruled
from dtproj.scenario import dumps, from_data, to_data


def broken_ruled(path):
    data = to_data(ruled())
    data["name"] = "broken"
    data["realizations"][0]["eta"] = {0: [["0"], ["0"]], 2: [["0", "0"]]}
    path.write_text(dumps(from_data(data)))
    return path


@pytest.mark.parametrize("name", NAMES)
def test_report_passes_on_the_corpus(name, capsys):
    assert main(["report", "--scenario", name]) == EXIT_OK
    assert f"report {name}: PASS" in capsys.readouterr().out


@pytest.mark.parametrize(
    "command", ["validate", "hl-check", "split", "supports", "projectors", "diagram-check"]
)
def test_commands_on_diagram(command):
    assert main([command, "--scenario", "diagram3"]) == EXIT_OK


def test_compose_check(capsys):
    assert main(["compose-check", "--scenario", "compose", "--format", "structured"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["data"]["chain"]["total"] == data["data"]["chain"]["dim"]


def test_failing_check_exits_one(tmp_path, capsys):
    path = broken_ruled(tmp_path / "broken.scenario")
    assert main(["hl-check", "--scenario", str(path)]) == EXIT_FAIL
    assert "fails at i = 1" in capsys.readouterr().out


def test_missing_file_exits_two(capsys):
    assert main(["validate", "--scenario", "/nonexistent/x.scenario"]) == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_invalid_file_exits_two(tmp_path):
    path = tmp_path / "bad.scenario"
    path.write_text("format: dtproj-scenario/1\nname: bad\nrealizations: 3\n")
    assert main(["validate", "--scenario", str(path)]) == EXIT_INPUT


def test_bad_arguments_exit_two():
    with pytest.raises(SystemExit) as err:
        main(["projectors", "--scenario", "blowup", "--family", "nonsense"])
    assert err.value.code == 2


def test_structured_projector_ranks(capsys):
    assert main(["projectors", "--scenario", "blowup", "--family", "support", "--format", "structured"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["data"]["betti"]["support"] == {"0,P2": 3, "0,pt": 1}


def test_batch_run(tmp_path, capsys):
    path = broken_ruled(tmp_path / "broken.scenario")
    assert main(["hl-check", "--scenario", "ruled", "--scenario", str(path), "--format", "structured"]) == EXIT_FAIL
    data = json.loads(capsys.readouterr().out)
    assert [d["ok"] for d in data] == [True, False]


def test_corpus_override(tmp_path, monkeypatch):
    broken_ruled(tmp_path / "mine.scenario")
    monkeypatch.setenv(ENV_VAR, str(tmp_path))
    assert main(["hl-check", "--scenario", "mine"]) == EXIT_FAIL
    assert main(["hl-check", "--scenario", "blowup"]) == EXIT_INPUT


def test_figures(tmp_path):
    assert main(["report", "--scenario", "blowup", "--figures", str(tmp_path)]) == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["blowup-betti-graded.png", "blowup-betti-ranks.png"]
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    main(["report", "--scenario", "blowup", "--figures", str(tmp_path)])
    assert first == {p.name: p.read_bytes() for p in tmp_path.iterdir()}


def test_generate_to_file(tmp_path, capsys):
    out = tmp_path / "g.scenario"
    assert main(["generate", "--seed", "3", "--profile", "supports", "--out", str(out)]) == EXIT_OK
    assert main(["generate", "--seed", "3", "--profile", "supports"]) == EXIT_OK
    assert capsys.readouterr().out == out.read_text()
    assert main(["report", "--scenario", str(out)]) == EXIT_OK


def test_generate_rejects_bad_sizes(capsys):
    assert main(["generate", "--seed", "0", "--max-dim", "0"]) == EXIT_INPUT
