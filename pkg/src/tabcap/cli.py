"""Command line for the pipeline; a thin client over the HTTP service.

Every subcommand does local file I/O and sends the payload to the
service layer: an in-process app by default, or a remote instance when
--service-url (or TABCAP_SERVICE_URL) points at one.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__


class ServiceClient:
    """POST/GET JSON against the in-process app or a remote service."""

    def __init__(self, base_url: str | None = None):
        self.base_url = base_url

    def post(self, path: str, payload: dict) -> dict:
        if self.base_url:
            with httpx.Client(base_url=self.base_url, timeout=None) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(self._post_local(path, payload))
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"{path} failed ({response.status_code}): {detail}")
        return response.json()

    async def _post_local(self, path: str, payload: dict) -> httpx.Response:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://tabcap.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)


pass_client = click.make_pass_decorator(ServiceClient)


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--service-url",
    envvar="TABCAP_SERVICE_URL",
    default=None,
    help="Remote service base URL; default runs the service in-process.",
)
@click.pass_context
def main(ctx: click.Context, service_url: str | None) -> None:
    """Table caption generation pipeline."""
    ctx.obj = ServiceClient(service_url)


def _read_records_file(path: Path) -> list[dict]:
    records = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise click.ClickException(f"{path}:{line_no}: {exc}") from exc
    if not records:
        raise click.ClickException(f"{path}: no records")
    return records


def _write_jsonl(rows, path: Path) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False))
            handle.write("\n")


@main.command("build-dataset")
@click.option("--input", "input_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "output_file", required=True,
              type=click.Path(dir_okay=False, path_type=Path))
@click.option("--band-overlap", default=0.5, show_default=True,
              help="Vertical overlap fraction that merges tokens into a band.")
@click.option("--table-gap", default=30.0, show_default=True,
              help="Vertical gap (units) that still joins table tokens.")
@click.option("--min-caption-sentences", default=0, show_default=True,
              help="Drop records whose caption has fewer sentences (0 keeps all).")
@pass_client
def build_dataset(
    client: ServiceClient,
    input_dir: Path,
    output_file: Path,
    band_overlap: float,
    table_gap: float,
    min_caption_sentences: int,
) -> None:
    """Turn a directory of annotation files into a record corpus."""
    pages = []
    for path in sorted(input_dir.glob("*.txt")):
        pages.append(
            {
                "page_id": path.stem,
                "lines": path.read_text(encoding="utf-8").splitlines(),
            }
        )
    if not pages:
        raise click.ClickException(f"no .txt annotation files under {input_dir}")
    result = client.post(
        "/dataset/build",
        {
            "pages": pages,
            "band_overlap": band_overlap,
            "table_gap": table_gap,
            "min_caption_sentences": min_caption_sentences,
        },
    )
    _write_jsonl(result["records"], output_file)
    for item in result["rejected"]:
        click.echo(f"rejected {item['page_id']}: {item['reason']}", err=True)
    click.echo(
        f"kept {len(result['records'])} of {len(pages)} pages -> {output_file}"
    )


@main.command("retrieve")
@click.option("--corpus", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--method", required=True,
              type=click.Choice(["none", "top1", "top2", "top3", "author"]))
@click.option("--k1", default=1.2, show_default=True)
@click.option("--b", default=0.75, show_default=True)
@click.option("--out", "out_file", default=None,
              type=click.Path(dir_okay=False, path_type=Path),
              help="Write JSON lines here instead of stdout.")
@pass_client
def retrieve(
    client: ServiceClient,
    corpus: Path,
    method: str,
    k1: float,
    b: float,
    out_file: Path | None,
) -> None:
    """Retrieve body sentences per record."""
    records = _read_records_file(corpus)
    result = client.post(
        "/retrieve", {"records": records, "method": method, "k1": k1, "b": b}
    )
    rows = result["results"]
    if out_file:
        _write_jsonl(rows, out_file)
    else:
        for row in rows:
            click.echo(json.dumps(row, ensure_ascii=False))


@main.command("assemble")
@click.option("--records", "records_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--variant", required=True, type=click.Choice(["rh", "ro", "rw"]))
@click.option("--method", required=True,
              type=click.Choice(["none", "top1", "top2", "top3", "author"]))
@click.option("--style", required=True, type=click.Choice(["sep", "plain"]))
@click.option("--k1", default=1.2, show_default=True)
@click.option("--b", default=0.75, show_default=True)
@click.option("--max-length", default=0,
              help="Prompt budget in tokens; 0 picks the style default.")
@click.option("--keep-numerals", is_flag=True, default=False,
              help="Keep numeral tokens in the tabular portion.")
@click.option("--out", "out_file", default=None,
              type=click.Path(dir_okay=False, path_type=Path))
@pass_client
def assemble(
    client: ServiceClient,
    records_file: Path,
    variant: str,
    method: str,
    style: str,
    k1: float,
    b: float,
    max_length: int,
    keep_numerals: bool,
    out_file: Path | None,
) -> None:
    """Build {record_id, prompt, target} items for one condition."""
    records = _read_records_file(records_file)
    result = client.post(
        "/assemble",
        {
            "records": records,
            "variant": variant,
            "method": method,
            "style": style,
            "k1": k1,
            "b": b,
            "max_length": max_length,
            "drop_numerals": not keep_numerals,
        },
    )
    rows = result["items"]
    if out_file:
        _write_jsonl(rows, out_file)
    else:
        for row in rows:
            click.echo(json.dumps(row, ensure_ascii=False))


@main.command("evaluate")
@click.option("--pairs", "pairs_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="JSON lines with candidate/reference fields.")
@click.option("--out", "out_file", required=True,
              type=click.Path(dir_okay=False, path_type=Path))
@click.option("--rouge-mode", default="recall", show_default=True,
              type=click.Choice(["recall", "f1"]))
@pass_client
def evaluate(
    client: ServiceClient, pairs_file: Path, out_file: Path, rouge_mode: str
) -> None:
    """Score candidate/reference pairs; write a report and per-pair CSV."""
    pairs = []
    for row in _read_records_file(pairs_file):
        if "candidate" not in row or "reference" not in row:
            raise click.ClickException(
                f"{pairs_file}: rows need candidate and reference fields"
            )
        pairs.append(
            {"candidate": row["candidate"], "reference": row["reference"]}
        )
    result = client.post(
        "/evaluate", {"pairs": pairs, "rouge_mode": rouge_mode}
    )
    out_file.write_text(
        json.dumps(result, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    csv_path = out_file.with_suffix(".csv")
    names = list(result["per_pair"][0].keys()) if result["per_pair"] else []
    with csv_path.open("w", encoding="utf-8") as handle:
        handle.write(",".join(["pair"] + names) + "\n")
        for i, row in enumerate(result["per_pair"]):
            handle.write(
                ",".join([str(i)] + [f"{row[name]:.6f}" for name in names]) + "\n"
            )
    click.echo(f"report -> {out_file}, per-pair scores -> {csv_path}")


@main.command("run-grid")
@click.option("--corpus", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--backend", default="stub", show_default=True,
              type=click.Choice(["http", "stub"]))
@click.option("--endpoint", default=None,
              help="Generation service URL (or $GENERATION_ENDPOINT).")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path))
@click.option("--conditions", default=None,
              help="Comma-separated subset, e.g. none,top1:rh,author.")
@click.option("--styles", default="sep,plain", show_default=True)
@click.option("--parallelism", default=4, show_default=True)
@click.option("--timeout-ms", default=30000, show_default=True)
@click.option("--retries", default=2, show_default=True)
@click.option("--max-new-tokens", default=128, show_default=True)
@pass_client
def run_grid_cmd(
    client: ServiceClient,
    corpus: Path,
    backend: str,
    endpoint: str | None,
    out_dir: Path,
    conditions: str | None,
    styles: str,
    parallelism: int,
    timeout_ms: int,
    retries: int,
    max_new_tokens: int,
) -> None:
    """Run the condition grid and write matrix.csv, matrix.json, generations."""
    records = _read_records_file(corpus)
    payload = {
        "records": records,
        "backend": backend,
        "endpoint": endpoint,
        "styles": [s for s in styles.split(",") if s],
        "conditions": (
            [c for c in conditions.split(",") if c] if conditions else None
        ),
        "parallelism": parallelism,
        "timeout_ms": timeout_ms,
        "retries": retries,
        "max_new_tokens": max_new_tokens,
    }
    result = client.post("/grid/run", payload)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "matrix.csv").write_text(result["csv"], encoding="utf-8")
    (out_dir / "matrix.json").write_text(
        json.dumps(result["matrix"], ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    gen_dir = out_dir / "generations"
    gen_dir.mkdir(exist_ok=True)
    for key, rows in result["generations"].items():
        name = key.replace("/", "-").replace(":", "-") + ".jsonl"
        _write_jsonl(rows, gen_dir / name)
    click.echo(f"grid written to {out_dir}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8200, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the pipeline service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
