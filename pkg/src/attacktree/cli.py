"""Command-line interface.

Exit codes: 0 success, 1 validation/generation failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .bundle import (
    ARCHITECTURE_FILE,
    KB_FILE,
    STUDY_FILE,
    load_bundle,
    load_kb,
    load_model,
    load_study,
    load_tree,
    save_tree,
)
from .dag import validate_dag
from .dot import export_dot, export_text
from .errors import AttackTreeError
from .generate import GenerationConfig, generate
from .maintain import regenerate
from .risk import validate_study
from .server import run_server


@click.group()
@click.version_option(__version__)
def main():
    """Generate and maintain attack-tree DAG skeletons from an architecture
    model, a risk study and a security knowledge base."""


@main.command()
@click.argument("bundle_dir", metavar="BUNDLE",
                type=click.Path(exists=True, file_okay=False, path_type=Path))
def validate(bundle_dir: Path):
    """Load BUNDLE and report every diagnostic; exit 1 if any."""
    failures = 0
    try:
        kb = load_kb(bundle_dir / KB_FILE)
        model = load_model(bundle_dir / ARCHITECTURE_FILE)
        study = load_study(bundle_dir / STUDY_FILE, model, kb)
    except AttackTreeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for diag in validate_study(study, model, kb):
        click.echo(f"{diag.code}: {diag.message}")
        failures += 1
    if failures:
        click.echo(f"{failures} problem(s) found", err=True)
        sys.exit(1)
    click.echo("bundle is valid")


def _config_from_flags(base: GenerationConfig, no_asset_layer: bool,
                       duplicate_subtrees: bool, postconditions: bool) -> GenerationConfig:
    return GenerationConfig(
        dag_mode=base.dag_mode and not duplicate_subtrees,
        include_asset_type_layer=base.include_asset_type_layer and not no_asset_layer,
        emit_postconditions=base.emit_postconditions or postconditions,
    )


def _write_outputs(outdir: Path, fe_id: str, dag, report: dict) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    tree_path = outdir / f"{fe_id}.tree.json"
    dot_path = outdir / f"{fe_id}.dot"
    report_path = outdir / f"{fe_id}.report.json"
    save_tree(dag, tree_path)
    dot_path.write_text(export_dot(dag), encoding="utf-8")
    report_path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n",
                           encoding="utf-8")
    return [tree_path, dot_path, report_path]


@main.command("generate")
@click.argument("bundle_dir", metavar="BUNDLE",
                type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--feared-event", "fe_id", required=True,
              help="Feared event id from the study file.")
@click.option("--no-asset-layer", is_flag=True,
              help="Skip the supporting-asset-type layer.")
@click.option("--duplicate-subtrees", is_flag=True,
              help="Clone shared subtrees instead of building a DAG.")
@click.option("--postconditions", is_flag=True,
              help="Emit repudiation postcondition leaves.")
@click.option("-o", "--out", "outdir", type=click.Path(path_type=Path),
              default=None, help="Output directory (default: BUNDLE/out).")
def generate_cmd(bundle_dir: Path, fe_id: str, no_asset_layer: bool,
                 duplicate_subtrees: bool, postconditions: bool,
                 outdir: Path | None):
    """Generate the attack DAG for one feared event; write tree, DOT and
    generation report."""
    try:
        bundle = load_bundle(bundle_dir)
        fe = bundle.study.feared_event(fe_id)
        config = _config_from_flags(bundle.config, no_asset_layer,
                                    duplicate_subtrees, postconditions)
        dag = generate(fe, bundle.model, bundle.study, bundle.kb, config)
    except AttackTreeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    report = {
        "feared_event": fe_id,
        "node_count": len(dag.nodes),
        "edge_count": len(dag.edges()),
        "diagnostics": [d.message for d in validate_dag(dag)],
        "flagged_expert_required": sum(
            1 for n in dag.walk() if "expert_required" in n.status),
    }
    for path in _write_outputs(outdir or bundle_dir / "out", fe_id, dag, report):
        click.echo(f"wrote {path}")


@main.command()
@click.argument("bundle_dir", metavar="BUNDLE",
                type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--against", "old_tree", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Previously generated tree JSON to regenerate against.")
@click.option("-o", "--out", "outdir", type=click.Path(path_type=Path),
              default=None, help="Output directory (default: BUNDLE/out).")
def regen(bundle_dir: Path, old_tree: Path, outdir: Path | None):
    """Regenerate against an old tree; write the new tree and the
    regeneration report."""
    try:
        bundle = load_bundle(bundle_dir)
        old_dag = load_tree(old_tree)
        fe = bundle.study.feared_event(old_dag.feared_event)
        new_dag, report = regenerate(fe, bundle.model, bundle.study, bundle.kb,
                                     bundle.config, old_dag, bundle.overlay)
    except AttackTreeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for path in _write_outputs(outdir or bundle_dir / "out", fe.id, new_dag,
                               report.to_dict()):
        click.echo(f"wrote {path}")


@main.command()
@click.argument("tree_file", metavar="TREE",
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["dot", "text"]),
              required=True)
def export(tree_file: Path, fmt: str):
    """Render a tree JSON document as DOT or a text outline on stdout."""
    try:
        dag = load_tree(tree_file)
    except AttackTreeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(export_dot(dag) if fmt == "dot" else export_text(dag), nl=False)


@main.command()
@click.argument("bundle_dir", metavar="BUNDLE",
                type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--addr", default="127.0.0.1:8321", show_default=True,
              help="host:port to bind.")
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Directory of static review-UI files to serve.")
def serve(bundle_dir: Path, addr: str, ui_dir: Path | None):
    """Serve the HTTP API (and optionally the review UI) for BUNDLE."""
    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.UsageError(f"--addr must be host:port, got '{addr}'")
    try:
        run_server(bundle_dir, host, int(port_text), ui_dir=ui_dir)
    except AttackTreeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
