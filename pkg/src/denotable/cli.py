"""Command-line pipeline: execute, enumerate, perturb, select, prune.

Commands share one artifact layout under --out: per example id,
`<id>.forms` holds consistent forms one canonical string per line,
`<id>.stats.json` the chart statistics, `<id>/` the perturbed world
TSVs, `<id>.classes.json` the equivalence classes, `<id>.selection.json`
the chosen world subset, and `<id>.pruned.forms` plus `<id>.prune.json`
the annotation-filtered remainder.  Artifact files are written
atomically and, stats timing aside, are byte-identical across reruns
with the same seed.

Exit codes: 0 success (empty results included), 2 usage or parse
errors, 3 I/O errors.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from statistics import mean, median

import click

from .answers import den_matches, target_from_answers
from .beam import beam_search, default_scorer
from .chart import chart_stats, first_pass, mark_backward, second_pass
from .classes import EqClass, equivalence_classes, prune, select_worlds, surviving_forms
from .dataset import (
    Example,
    RunConfig,
    atomic_write_text,
    example_from_json,
    example_table,
    example_to_json,
    load_examples,
    stream_seed,
)
from .denotations import den_to_json
from .executor import execute
from .fictitious import generate_worlds, manifest_text, world_tsv
from .forms import FormParseError, parse_form
from .grammar import RuleSet, default_ruleset, parse_ruleset
from .tables import TableError, parse_table
from .world import build_world


class ParseFailure(click.ClickException):
    exit_code = 2


class IOFailure(click.ClickException):
    exit_code = 3


def _load_rules(config: RunConfig) -> RuleSet:
    if config.rules is None:
        return default_ruleset()
    try:
        text = Path(config.rules).read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot read rules manifest: {e}") from None
    try:
        return parse_ruleset(text)
    except ValueError as e:
        raise ParseFailure(f"bad rules manifest: {e}") from None


def _read_dataset(path: str) -> tuple[list[Example], Path]:
    try:
        examples = load_examples(path)
    except OSError as e:
        raise IOFailure(f"cannot read dataset: {e}") from None
    except ValueError as e:
        raise ParseFailure(str(e)) from None
    return examples, Path(path).parent


def _forms_text(canons: list[str]) -> str:
    return "".join(c + "\n" for c in canons)


def _json_text(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _world_seed(config: RunConfig, ex_id: str) -> int:
    return stream_seed(config.seed, f"worlds:{ex_id}")


def _dpd_one(ex: Example, base: Path, config: RunConfig, out: Path) -> None:
    rules = _load_rules(config)
    table = example_table(ex, base)
    world = build_world(table)
    target = target_from_answers(list(ex.answer))
    started = time.perf_counter()
    chart = first_pass(ex.question, world, rules, config.s_max)
    mark_backward(chart, target)
    forms, truncated = second_pass(chart, config.cap)
    stats = chart_stats(chart, len(forms), truncated)
    atomic_write_text(out / f"{ex.id}.forms", _forms_text([f.canon for f in forms]))
    atomic_write_text(
        out / f"{ex.id}.stats.json",
        _json_text(
            {
                "id": ex.id,
                "pass1_cells": stats.pass1_cells,
                "pass2_cells": stats.pass2_cells,
                "combos_total": stats.combos_total,
                "z_size": stats.z_size,
                "truncated": stats.truncated,
                "wall_time": round(time.perf_counter() - started, 6),
            }
        ),
    )


def _beam_one(ex: Example, base: Path, config: RunConfig, out: Path) -> None:
    rules = _load_rules(config)
    table = example_table(ex, base)
    world = build_world(table)
    target = target_from_answers(list(ex.answer))
    scorer = default_scorer(stream_seed(config.seed, f"beam:{ex.id}"))
    derivations = beam_search(
        ex.question, world, rules, config.s_max, beam=config.beam, scorer=scorer
    )
    canons = [d.form.canon for d in derivations if den_matches(d.den, target)]
    atomic_write_text(out / f"{ex.id}.beam.forms", _forms_text(canons))


def _worlds_one(ex: Example, base: Path, config: RunConfig, out: Path) -> None:
    table = example_table(ex, base)
    batch = generate_worlds(table, ex.question, config.k, _world_seed(config, ex.id))
    world_dir = out / ex.id
    for i, w in enumerate(batch.worlds):
        atomic_write_text(world_dir / f"world-{i:04d}.tsv", world_tsv(w))
    atomic_write_text(world_dir / "manifest.json", manifest_text(batch))


def _load_forms(out: Path, ex_id: str):
    path = out / f"{ex_id}.forms"
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IOFailure(f"missing forms file (run dpd first): {e}") from None
    try:
        return [parse_form(line) for line in lines if line.strip()]
    except FormParseError as e:
        raise ParseFailure(f"{path}: {e}") from None


def _load_worlds(out: Path, ex_id: str):
    world_dir = out / ex_id
    try:
        manifest = json.loads((world_dir / "manifest.json").read_text(encoding="utf-8"))
    except OSError as e:
        raise IOFailure(f"missing worlds dir (run worlds first): {e}") from None
    worlds = []
    for entry in manifest["worlds"]:
        path = world_dir / f"world-{entry['index']:04d}.tsv"
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as e:
            raise IOFailure(f"missing world table: {e}") from None
        worlds.append(build_world(parse_table(raw, format="tsv", table_id=entry["world"])))
    return worlds


def _classes_for(out: Path, ex_id: str) -> list[EqClass]:
    forms = _load_forms(out, ex_id)
    if not forms:
        return []
    return equivalence_classes(forms, _load_worlds(out, ex_id))


def _classes_one(ex: Example, base: Path, config: RunConfig, out: Path) -> None:
    classes = _classes_for(out, ex.id)
    atomic_write_text(
        out / f"{ex.id}.classes.json",
        _json_text(
            {
                "id": ex.id,
                "count": len(classes),
                "classes": [
                    {
                        "representative": c.representative.canon,
                        "members": [f.canon for f in c.members],
                        "key": list(c.key),
                    }
                    for c in classes
                ],
            }
        ),
    )


def _run_batch(command: str, dataset: str, config: RunConfig, out: Path) -> None:
    """Apply one per-example stage across the dataset, optionally in parallel."""
    worker = {"dpd": _dpd_one, "beam": _beam_one, "worlds": _worlds_one, "classes": _classes_one}[command]
    examples, base = _read_dataset(dataset)
    out.mkdir(parents=True, exist_ok=True)
    if config.jobs == 1 or len(examples) <= 1:
        for ex in examples:
            _guard_example(worker, ex, base, config, out)
        return
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        jobs = [
            pool.submit(_pool_entry, command, example_to_json(ex), str(base), config.to_json(), str(out))
            for ex in examples
        ]
        failures = [msg for msg in (j.result() for j in jobs) if msg is not None]
    if failures:
        raise IOFailure("; ".join(failures))


def _pool_entry(command: str, ex_data: dict, base: str, config_data: dict, out: str) -> str | None:
    """Worker-process entry; returns an error string instead of raising."""
    worker = {"dpd": _dpd_one, "beam": _beam_one, "worlds": _worlds_one, "classes": _classes_one}[command]
    ex = example_from_json(ex_data)
    try:
        worker(ex, Path(base), RunConfig.from_json(config_data), Path(out))
        return None
    except (OSError, ValueError, TableError, click.ClickException) as e:
        return f"{ex.id}: {e}"


def _guard_example(worker, ex: Example, base: Path, config: RunConfig, out: Path) -> None:
    try:
        worker(ex, base, config, out)
    except click.ClickException:
        raise
    except FormParseError as e:
        raise ParseFailure(f"{ex.id}: {e}") from None
    except TableError as e:
        raise ParseFailure(f"{ex.id}: {e}") from None
    except OSError as e:
        raise IOFailure(f"{ex.id}: {e}") from None
    except ValueError as e:
        raise ParseFailure(f"{ex.id}: {e}") from None


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Root random seed.")
@click.option("--s-max", type=int, default=7, show_default=True, help="Maximum form size.")
@click.option("--beam", type=int, default=None, help="Beam width (default unlimited).")
@click.option("--k", type=int, default=30, show_default=True, help="Perturbed worlds to generate.")
@click.option("--l", type=int, default=5, show_default=True, help="Worlds to select for annotation.")
@click.option("--tolerance", type=int, default=0, show_default=True, help="Allowed annotation mismatches.")
@click.option("--rules", type=str, default=None, help="Rule manifest path (default built-in rules).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel worker processes.")
@click.option("--cap", type=int, default=RunConfig.cap, show_default=True, help="Enumerated-form cap.")
@click.pass_context
def main(ctx, seed, s_max, beam, k, l, tolerance, rules, jobs, cap):
    """Enumerate, separate, and prune logical forms over data tables."""
    try:
        ctx.obj = RunConfig(
            s_max=s_max,
            beam=beam,
            k=k,
            l=l,
            tolerance=tolerance,
            seed=seed,
            rules=rules,
            jobs=jobs,
            cap=cap,
        )
    except ValueError as e:
        raise click.UsageError(str(e)) from None


@main.command(name="execute")
@click.argument("form_text")
@click.argument("table_path", type=click.Path())
@click.pass_obj
def execute_cmd(config: RunConfig, form_text: str, table_path: str):
    """Execute one logical form against a table and print its denotation."""
    try:
        form = parse_form(form_text)
    except FormParseError as e:
        raise ParseFailure(str(e)) from None
    path = Path(table_path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(str(e)) from None
    format = "tsv" if path.suffix.lower() == ".tsv" else "csv"
    try:
        table = parse_table(raw, format=format)
    except TableError as e:
        raise ParseFailure(str(e)) from None
    den = execute(form, build_world(table))
    click.echo(json.dumps(den_to_json(den), sort_keys=True))


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def dpd(config: RunConfig, dataset: str, out: str):
    """Enumerate all consistent forms per example; write forms and stats."""
    _run_batch("dpd", dataset, config, Path(out))


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def beam(config: RunConfig, dataset: str, out: str):
    """Beam-search consistent forms per example with a seeded scorer."""
    _run_batch("beam", dataset, config, Path(out))


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def worlds(config: RunConfig, dataset: str, out: str):
    """Generate perturbed world tables per example."""
    _run_batch("worlds", dataset, config, Path(out))


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def classes(config: RunConfig, dataset: str, out: str):
    """Group the enumerated forms by denotation tuple over the worlds."""
    _run_batch("classes", dataset, config, Path(out))


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def select(config: RunConfig, dataset: str, out: str):
    """Choose the l-world subset minimizing the partition objective."""
    examples, base = _read_dataset(dataset)
    for ex in examples:
        classes = _classes_for(Path(out), ex.id)
        if not classes:
            result = {"id": ex.id, "worlds": [], "world_ids": [], "objective": 0.0}
        else:
            k = len(classes[0].key)
            sel = select_worlds(classes, min(config.l, k))
            manifest = json.loads(
                (Path(out) / ex.id / "manifest.json").read_text(encoding="utf-8")
            )
            ids = [manifest["worlds"][w]["world"] for w in sel.worlds]
            result = {
                "id": ex.id,
                "worlds": list(sel.worlds),
                "world_ids": ids,
                "objective": sel.objective,
            }
        atomic_write_text(Path(out) / f"{ex.id}.selection.json", _json_text(result))
        click.echo(json.dumps(result, sort_keys=True))


@main.command(name="prune")
@click.argument("dataset", type=click.Path())
@click.argument("annotations_path", type=click.Path())
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def prune_cmd(config: RunConfig, dataset: str, annotations_path: str, out: str):
    """Filter classes against an annotations file, keeping near matches.

    The annotations file maps example id to {world index: answer list}.
    """
    try:
        raw = Path(annotations_path).read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot read annotations: {e}") from None
    try:
        annotations = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseFailure(f"bad annotations file: {e.msg}") from None
    examples, base = _read_dataset(dataset)
    for ex in examples:
        classes = _classes_for(Path(out), ex.id)
        per_world = {}
        for key, answers in annotations.get(ex.id, {}).items():
            try:
                per_world[int(key)] = target_from_answers(answers)
            except ValueError as e:
                raise ParseFailure(f"{ex.id} world {key}: {e}") from None
        survivors, report = prune(classes, per_world, config.tolerance)
        forms = surviving_forms(survivors)
        atomic_write_text(
            Path(out) / f"{ex.id}.pruned.forms", _forms_text([f.canon for f in forms])
        )
        atomic_write_text(
            Path(out) / f"{ex.id}.prune.json",
            _json_text(
                {
                    "id": ex.id,
                    "tolerance": config.tolerance,
                    "annotated_worlds": sorted(per_world),
                    "surviving_classes": len(survivors),
                    "surviving_forms": len(forms),
                    "all_pruned": bool(classes) and not survivors,
                    "classes": [
                        {
                            "representative": r.representative,
                            "members": r.members,
                            "distance": r.distance,
                            "survived": r.survived,
                        }
                        for r in report
                    ],
                }
            ),
        )


@main.command()
@click.argument("stats_dir", type=click.Path())
def report(stats_dir: str):
    """Aggregate per-example stats files into one summary row."""
    stats = sorted(Path(stats_dir).glob("*.stats.json"))
    if not stats:
        raise IOFailure(f"no stats in {stats_dir}")
    z_sizes, reductions = [], []
    class_counts, single = [], []
    for path in stats:
        data = json.loads(path.read_text(encoding="utf-8"))
        z_sizes.append(data["z_size"])
        if data["pass1_cells"]:
            reductions.append(1.0 - data["pass2_cells"] / data["pass1_cells"])
        sibling = path.with_name(path.name.replace(".stats.json", ".classes.json"))
        if sibling.exists():
            class_counts.append(json.loads(sibling.read_text(encoding="utf-8"))["count"])
        pruned = path.with_name(path.name.replace(".stats.json", ".prune.json"))
        if pruned.exists():
            single.append(
                json.loads(pruned.read_text(encoding="utf-8"))["surviving_classes"] == 1
            )
    summary = {
        "examples": len(stats),
        "z_mean": mean(z_sizes),
        "z_median": median(z_sizes),
        "cell_reduction_mean": mean(reductions) if reductions else None,
        "classes_mean": mean(class_counts) if class_counts else None,
        "single_class_fraction": mean(single) if single else None,
    }
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--host", default=None, help="Bind host (default from BIND_ADDR).")
@click.option("--port", type=int, default=None, help="Bind port (default from BIND_ADDR).")
def serve(host, port):
    """Run the annotation HTTP service."""
    import os

    import uvicorn

    from .service import create_app

    bind = os.environ.get("BIND_ADDR", "127.0.0.1:8000")
    default_host, _, default_port = bind.partition(":")
    uvicorn.run(
        create_app(),
        host=host or default_host or "127.0.0.1",
        port=port if port is not None else int(default_port or 8000),
    )


if __name__ == "__main__":
    main()
