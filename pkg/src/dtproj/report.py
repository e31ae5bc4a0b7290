"""Text, structured and figure output for check results."""

from __future__ import annotations

import json
from pathlib import Path

from .checks import Result, fmt_index, jsonable
from .scenario import ScenarioFile


def render_structured(results: list[Result]) -> str:
    payload = [r.to_dict() for r in results]
    return json.dumps(payload[0] if len(payload) == 1 else payload, indent=2) + "\n"


def _table(rows: list[list[str]], header: list[str]) -> list[str]:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()
    out = [line, "  ".join("-" * w for w in widths)]
    for r in rows:
        out.append("  ".join(str(x).ljust(w) for x, w in zip(r, widths)).rstrip())
    return out


def _rank_rows(data: dict) -> list[list[str]]:
    rows = []
    for label, fams in data.items():
        if not isinstance(fams, dict):
            continue
        for kind, ranks in fams.items():
            if not isinstance(ranks, dict):
                continue
            for ix, rk in ranks.items():
                rows.append([label, kind, fmt_index(ix), str(rk)])
    return rows


def _data_lines(data, indent: int = 2) -> list[str]:
    out = []
    pad = " " * indent
    for k, v in jsonable(data).items():
        if isinstance(v, dict) and v:
            out.append(f"{pad}{k}:")
            out.extend(_data_lines(v, indent + 2))
        elif isinstance(v, list) and v and isinstance(v[0], list):
            out.append(f"{pad}{k}:")
            for row in v:
                out.append(f"{pad}  [{' '.join(map(str, row))}]")
        else:
            out.append(f"{pad}{k}: {v}")
    return out


def render_text(results: list[Result]) -> str:
    out = []
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        out.append(f"{res.command} {res.scenario}: {status}")
        rows = [["ok" if c.passed else "FAIL", c.name, c.subject, c.detail] for c in res.checks]
        if rows:
            out.extend(_table(rows, ["status", "check", "subject", "detail"]))
        if res.command == "projectors" or res.command == "report":
            data = res.data.get("projectors", res.data) if res.command == "report" else res.data
            ranks = _rank_rows(data)
            if ranks:
                out.append("")
                out.append("projector ranks")
                out.extend(_table(ranks, ["realization", "family", "index", "rank"]))
        edges = res.data.get("edges") or res.data.get("diagram-check", {}).get("edges")
        if edges:
            out.append("")
            out.append("comparison edges")
            kinds = sorted({k for row in edges.values() for k in row})
            rows = [[e] + ["ok" if row.get(k, True) else "FAIL" for k in kinds] for e, row in edges.items()]
            out.extend(_table(rows, ["edge"] + kinds))
        if res.command not in ("projectors", "report", "diagram-check") and res.data:
            out.append("")
            out.extend(_data_lines(res.data))
        failed = res.failures()
        if failed:
            out.append("")
            for c in failed:
                out.append(f"failed: {c.name} [{c.subject}] {c.detail}".rstrip())
        out.append("")
    return "\n".join(out)


def render_figures(s: ScenarioFile, outdir: str | Path) -> list[Path]:
    """Graded dimensions and projector ranks per realization, as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .harness import PipelineError, run_pipeline

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    meta = {"Software": None}
    for r in s.realizations:
        try:
            p = run_pipeline(r)
        except PipelineError:
            continue
        space = p.triple.space
        gc = space.graded
        levels, degrees = list(space.levels), space.degrees
        grid = [[gc.gr_dim(b, k) if b in gc.pieces else 0 for k in degrees] for b in levels]
        fig, ax = plt.subplots(figsize=(1 + 0.6 * len(degrees), 1 + 0.5 * len(levels)))
        ax.imshow(grid, cmap="Blues", aspect="auto", origin="lower")
        for yi, row in enumerate(grid):
            for xi, v in enumerate(row):
                ax.text(xi, yi, str(v), ha="center", va="center")
        ax.set_xticks(range(len(degrees)), [str(k) for k in degrees])
        ax.set_yticks(range(len(levels)), [str(b) for b in levels])
        ax.set_xlabel("degree")
        ax.set_ylabel("perversity")
        ax.set_title(f"{s.name} / {r.label}: dim Gr")
        fig.tight_layout()
        path = outdir / f"{s.name}-{r.label}-graded.png"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        paths.append(path)

        fig, axes = plt.subplots(1, len(p.families), figsize=(3.2 * len(p.families), 3))
        for ax, (kind, fam) in zip(axes, p.families.items()):
            ranks = fam.ranks()
            ax.bar(range(len(ranks)), list(ranks.values()))
            ax.set_xticks(range(len(ranks)), [fmt_index(ix) for ix in ranks], rotation=60, fontsize=7)
            ax.set_title(kind)
        fig.suptitle(f"{s.name} / {r.label}: projector ranks")
        fig.tight_layout()
        path = outdir / f"{s.name}-{r.label}-ranks.png"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        paths.append(path)
    return paths
