"""Result tables: per-path CSVs, aggregate statistics and run-directory merging.

Numbers are written with 17 significant digits so they round-trip exactly,
and row order depends only on the config, never on scheduling; the same
config and seed therefore give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from pathlib import Path

import numpy as np
import yaml

from ..errors import MergeError
from .config import SCHEMA_VERSION, compatibility_key, dump

COLUMNS = ("run_id", "path_index", "t", "x_index", "quantity", "value", "method")
AGG_COLUMNS = COLUMNS + ("provenance",)
STATS = ("count", "mean", "median", "q05", "q95")
_PARAM = re.compile(r"^(?P<name>[^\[]+)(\[(?P<args>[^\]]*)\])?$")


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def split_quantity(q: str) -> tuple[str, dict]:
    """``"sup_error[steps=64]"`` -> ``("sup_error", {"steps": "64"})``."""
    m = _PARAM.match(q)
    args = m.group("args")
    params = dict(a.split("=", 1) for a in args.split(",")) if args else {}
    return m.group("name"), params


def read_per_path(path: Path) -> list[tuple]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise MergeError(f"{path}: unexpected columns {header}")
        for run, p, t, x, q, v, m in reader:
            out.append((run, int(p), float(t), int(x) if x.lstrip("-").isdigit() else x, q,
                        float(v), m))
    return out


def _groups(rows):
    """Rows grouped by (method, quantity, t, x_index) in first-appearance order."""
    groups = {}
    for r in rows:
        _, _, t, x, q, v, m = r
        groups.setdefault((m, q, t, x), []).append(v)
    return groups


def aggregate_rows(rows) -> list[tuple]:
    """Summary rows ``(path_index="agg", t, x_index, quantity:stat, value, method)``."""
    out = []
    groups = _groups(rows)
    for (m, q, t, x), vals in groups.items():
        v = np.asarray(vals, dtype=float)
        finite = v[np.isfinite(v)]
        stats = {"count": len(v)}
        if finite.size:
            stats.update(mean=finite.mean(), median=np.median(finite),
                         q05=np.quantile(finite, 0.05), q95=np.quantile(finite, 0.95))
        else:
            stats.update(mean=np.nan, median=np.nan, q05=np.nan, q95=np.nan)
        out += [("agg", t, x, f"{q}:{s}", stats[s], m) for s in STATS]
    out += ensemble_exponents(groups)
    out += [("agg", r["t"], "agg", q, r[k], r["method"]) for r in convergence_table(groups)
            for q, k in (("rms_error", "rms_error"), ("observed_order", "observed_order"),
                         ("fitted_order", "fitted_order"))
            if r[k] is not None]
    return out


def _fit(x, y) -> tuple[float, float]:
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    return float(slope), float(1 - np.sum(resid**2) / ss) if ss > 0 else 1.0


def ensemble_exponents(groups) -> list[tuple]:
    """Exponent regressed on the across-path medians of per-path median increments."""
    out = []
    methods = sorted({m for (m, q, _, _) in groups if q == "median_increment"})
    for m in methods:
        pts = sorted((t, np.median(v)) for (mm, q, t, _), v in groups.items()
                     if mm == m and q == "median_increment")
        pts = [(t, v) for t, v in pts if v > 0]
        if len(pts) < 3:
            continue
        lag, med = np.log(np.array(pts)).T
        slope, r2 = _fit(lag, med)
        T = max(t for (mm, _, t, _) in groups if mm == m)
        out.append(("agg", T, "agg", "ensemble_exponent", float(np.clip(slope, 0, 1)), m))
        out.append(("agg", T, "agg", "ensemble_r2", r2, m))
    return out


def convergence_table(groups) -> list[dict]:
    """RMS-over-paths errors per level with successive and fitted observed orders."""
    table = []
    by_method = {}
    for (m, q, t, _), v in groups.items():
        name, params = split_quantity(q)
        if name == "sup_error":
            by_method.setdefault(m, []).append((int(params["steps"]), t, np.asarray(v)))
    for m, levels in by_method.items():
        levels.sort()
        steps = np.array([s for s, _, _ in levels], dtype=float)
        T = levels[0][1]
        rms = np.array([np.sqrt(np.mean(v**2)) for _, _, v in levels])
        fitted = _fit(np.log(T / steps), np.log(rms))[0] if len(levels) > 1 else None
        for i, (s, t, v) in enumerate(levels):
            order = None if i == 0 else float(np.log(rms[i - 1] / rms[i]) / np.log(
                steps[i] / steps[i - 1]))
            table.append({"method": m, "steps": s, "dt": T / s, "t": t,
                          "rms_error": float(rms[i]), "median_error": float(np.median(v)),
                          "observed_order": order, "fitted_order": fitted})
    return table


def convergence_csv(groups) -> str | None:
    table = convergence_table(groups)
    if not table:
        return None
    cols = ("method", "steps", "dt", "rms_error", "median_error", "observed_order",
            "fitted_order")
    return _to_csv(cols, [tuple("" if r[c] is None else r[c] for c in cols) for r in table])


PLOT_SCRIPT = '''"""Plot the medians and 5-95% bands from aggregate.csv (generated file)."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
series = defaultdict(dict)
with open(here / "aggregate.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        if row["x_index"] != "agg" or ":" not in row["quantity"]:
            continue
        q, stat = row["quantity"].rsplit(":", 1)
        series[(q, row["method"])].setdefault(float(row["t"]), {})[stat] = float(row["value"])
timed = {k: v for k, v in series.items() if len(v) > 1}
if timed:
    fig, ax = plt.subplots()
    for (q, m), pts in sorted(timed.items()):
        t = sorted(pts)
        ax.plot(t, [pts[s]["median"] for s in t], label=f"{q} ({m})")
        ax.fill_between(t, [pts[s]["q05"] for s in t], [pts[s]["q95"] for s in t], alpha=0.2)
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(here / "aggregate.png", dpi=120)
conv = here / "convergence.csv"
if conv.exists():
    rows = list(csv.DictReader(open(conv, newline="")))
    fig, ax = plt.subplots()
    for m in sorted({r["method"] for r in rows}):
        pts = [(float(r["dt"]), float(r["rms_error"])) for r in rows if r["method"] == m]
        ax.loglog(*zip(*pts), "o-", label=m)
    ax.set_xlabel("dt")
    ax.set_ylabel("RMS sup error")
    ax.legend()
    fig.savefig(here / "convergence.png", dpi=120)
'''


def provenance(sources: list[dict]) -> str:
    parts = [f"seed={s['master_seed']};paths={s['first_path']}-"
             f"{s['first_path'] + s['paths'] - 1}" for s in sources]
    tag = "+".join(parts)
    if len({s["master_seed"] for s in sources}) > 1:
        tag = "disjoint-seeds:" + tag
    return tag


def write_run(directory: Path, cfg: dict, manifest: dict, rows) -> None:
    """Write per-path, aggregate and convergence CSVs plus the config echo and plot script."""
    directory.mkdir(parents=True, exist_ok=True)
    run_id = manifest["run_id"]
    (directory / "config.yaml").write_text(dump(cfg))
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    full = [(run_id, *r) if len(r) == 6 else tuple(r) for r in rows]
    (directory / "paths.csv").write_text(_to_csv(COLUMNS, full))
    agg = aggregate_rows(full)
    prov = provenance(manifest["sources"])
    (directory / "aggregate.csv").write_text(
        _to_csv(AGG_COLUMNS, [(run_id, *r, prov) for r in agg]))
    conv = convergence_csv(_groups(full))
    if conv is not None:
        (directory / "convergence.csv").write_text(conv)
    (directory / "plot.py").write_text(PLOT_SCRIPT)


def read_run(directory: Path) -> tuple[dict, dict, list]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    cfg = yaml.safe_load((directory / "config.yaml").read_text())
    rows = read_per_path(directory / "paths.csv")
    return cfg, manifest, rows


def merge_runs(directories) -> tuple[dict, dict, list]:
    """Merge run directories with compatible configs into one table.

    Sources are ordered by ``(master_seed, first_path)``; duplicate
    ``(seed, path)`` pairs and mixed schema versions are rejected.
    """
    loaded = [read_run(d) for d in directories]
    if not loaded:
        raise MergeError("nothing to aggregate")
    versions = {m.get("schema_version") for _, m, _ in loaded}
    if len(versions) > 1:
        raise MergeError(f"mixed schema versions {sorted(map(str, versions))}")
    if versions != {SCHEMA_VERSION}:
        raise MergeError(f"unsupported schema version {versions.pop()}")
    keys = {m["compatibility_key"] for _, m, _ in loaded}
    if len(keys) > 1:
        raise MergeError("run directories come from incompatible configs")
    seen, sources, rows = set(), [], []
    for cfg, man, r in sorted(loaded, key=lambda x: (x[0]["master_seed"], x[0]["first_path"])):
        for s in man["sources"]:
            for p in range(s["first_path"], s["first_path"] + s["paths"]):
                if (s["master_seed"], p) in seen:
                    raise MergeError(f"path {p} of seed {s['master_seed']} appears twice")
                seen.add((s["master_seed"], p))
            sources.append(s)
        rows += r
    cfg = loaded[0][0] if len(loaded) == 1 else sorted(
        (c for c, _, _ in loaded), key=lambda c: (c["master_seed"], c["first_path"]))[0]
    run_ids = sorted({m["run_id"] for _, m, _ in loaded})
    merged_id = run_ids[0] if len(run_ids) == 1 else hashlib.sha256(
        "+".join(run_ids).encode()).hexdigest()[:12]
    manifest = {"schema_version": SCHEMA_VERSION, "run_id": merged_id,
                "compatibility_key": compatibility_key(cfg), "experiment": cfg["experiment"],
                "sources": sources}
    return cfg, manifest, rows
