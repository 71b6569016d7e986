import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import fixture_pages, synth_corpus
from tabcap import __version__
from tabcap.cli import main


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


def write_corpus(path: Path, n: int = 4) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for record in synth_corpus(n=n, seed=5):
            handle.write(json.dumps(record.to_dict()) + "\n")


def test_version_flag(runner: CliRunner) -> None:
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_build_dataset_end_to_end(runner: CliRunner, tmp_path: Path) -> None:
    pages_dir = tmp_path / "pages"
    pages_dir.mkdir()
    for pid, (lines, _) in fixture_pages().items():
        (pages_dir / f"{pid}.txt").write_text("\n".join(lines), encoding="utf-8")
    out = tmp_path / "corpus.jsonl"
    result = runner.invoke(
        main,
        ["build-dataset", "--input", str(pages_dir), "--output", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "kept 8 of 13 pages" in result.output
    assert "rejected two-table: multiple tables" in result.output
    assert "rejected no-paragraph: no paragraph tokens" in result.output
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert {r["page_id"] for r in rows} == {
        pid for pid, (_, ok) in fixture_pages().items() if ok
    }
    assert all(
        set(r) == {"page_id", "sentences", "caption", "table"} for r in rows
    )


def test_build_dataset_empty_dir_fails(runner: CliRunner, tmp_path: Path) -> None:
    out = tmp_path / "corpus.jsonl"
    result = runner.invoke(
        main, ["build-dataset", "--input", str(tmp_path), "--output", str(out)]
    )
    assert result.exit_code != 0
    assert "no .txt annotation files" in result.output


def test_retrieve_stdout(runner: CliRunner, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=3)
    result = runner.invoke(
        main, ["retrieve", "--corpus", str(corpus), "--method", "top2"]
    )
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in result.output.splitlines()]
    assert len(rows) == 3
    assert all(len(r["sentences"]) <= 2 for r in rows)


def test_retrieve_rejects_unknown_method(
    runner: CliRunner, tmp_path: Path
) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=1)
    result = runner.invoke(
        main, ["retrieve", "--corpus", str(corpus), "--method", "top9"]
    )
    assert result.exit_code != 0


def test_assemble_to_file(runner: CliRunner, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=3)
    out = tmp_path / "prompts.jsonl"
    result = runner.invoke(
        main,
        ["assemble", "--records", str(corpus), "--variant", "rw",
         "--method", "top1", "--style", "sep", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(rows) == 3
    for row in rows:
        assert set(row) == {"record_id", "prompt", "target"}
        assert "</s>" in row["prompt"]


def test_assemble_matches_grid_prompts(runner: CliRunner, tmp_path: Path) -> None:
    # staged commands and the integrated grid agree on the prompt text
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=3)
    out = tmp_path / "prompts.jsonl"
    grid_dir = tmp_path / "grid"
    staged = runner.invoke(
        main,
        ["assemble", "--records", str(corpus), "--variant", "rh",
         "--method", "top1", "--style", "plain", "--out", str(out)],
    )
    assert staged.exit_code == 0, staged.output
    grid = runner.invoke(
        main,
        ["run-grid", "--corpus", str(corpus), "--out", str(grid_dir),
         "--conditions", "top1:rh", "--styles", "plain"],
    )
    assert grid.exit_code == 0, grid.output
    staged_prompts = [
        json.loads(l)["prompt"] for l in out.read_text().splitlines()
    ]
    grid_rows = (grid_dir / "generations" / "plain-top1-rh.jsonl").read_text()
    grid_prompts = [json.loads(l)["prompt"] for l in grid_rows.splitlines()]
    assert staged_prompts == grid_prompts


def test_evaluate_writes_report_and_csv(
    runner: CliRunner, tmp_path: Path
) -> None:
    pairs = tmp_path / "pairs.jsonl"
    with pairs.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({
            "candidate": "the cat sat on the mat",
            "reference": "the cat is on the mat",
        }) + "\n")
        handle.write(json.dumps({
            "candidate": "alpha beta", "reference": "alpha beta",
        }) + "\n")
    out = tmp_path / "report.json"
    result = runner.invoke(
        main, ["evaluate", "--pairs", str(pairs), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert set(report) == {"aggregates", "per_pair", "metadata"}
    csv_lines = (tmp_path / "report.csv").read_text().splitlines()
    assert csv_lines[0].startswith("pair,")
    assert len(csv_lines) == 3
    assert csv_lines[2].split(",")[1] == "100.000000"


def test_evaluate_requires_fields(runner: CliRunner, tmp_path: Path) -> None:
    pairs = tmp_path / "pairs.jsonl"
    pairs.write_text(json.dumps({"candidate": "x"}) + "\n", encoding="utf-8")
    out = tmp_path / "report.json"
    result = runner.invoke(
        main, ["evaluate", "--pairs", str(pairs), "--out", str(out)]
    )
    assert result.exit_code != 0
    assert "candidate and reference" in result.output


def test_run_grid_writes_outputs(runner: CliRunner, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=4)
    out_dir = tmp_path / "grid"
    result = runner.invoke(
        main, ["run-grid", "--corpus", str(corpus), "--out", str(out_dir)]
    )
    assert result.exit_code == 0, result.output
    csv_lines = (out_dir / "matrix.csv").read_text().splitlines()
    assert len(csv_lines) == 12
    matrix = json.loads((out_dir / "matrix.json").read_text())
    assert matrix["style_order"] == ["sep", "plain"]
    gen_files = sorted(p.name for p in (out_dir / "generations").iterdir())
    assert len(gen_files) == 22
    assert "sep-none.jsonl" in gen_files
    assert "plain-top3-rw.jsonl" in gen_files


def test_run_grid_bad_corpus_line(runner: CliRunner, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text("{not json\n", encoding="utf-8")
    result = runner.invoke(
        main, ["run-grid", "--corpus", str(corpus), "--out", str(tmp_path / "g")]
    )
    assert result.exit_code != 0
    assert ":1:" in result.output


def test_cli_surfaces_service_errors(runner: CliRunner, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, n=2)
    result = runner.invoke(
        main,
        ["run-grid", "--corpus", str(corpus), "--out", str(tmp_path / "g"),
         "--conditions", "bogus"],
    )
    assert result.exit_code != 0
    assert "/grid/run failed (400)" in result.output
    assert "unknown condition" in result.output
