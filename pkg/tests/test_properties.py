"""Randomized structural properties of generation and maintenance.

The heavyweight 1000-model sweep lives in the acceptance suite; these runs
use fewer seeds but check the same properties plus a few extras (KB
monotonicity, label purity under permutation, rename invariance).
"""

import random

from attacktree.dag import Gate, NodeKind, synth_label, validate_dag
from attacktree.generate import generate
from attacktree.kb import KnowledgeBase, ThreatDef
from attacktree.maintain import regenerate

from modelgen import expected_node_count, random_setup

N_SEEDS = 120


def _toposort_ok(dag) -> bool:
    indeg: dict[str, int] = {p: 0 for p in dag.nodes}
    adj: dict[str, list[str]] = {p: [] for p in dag.nodes}
    for parent, child in dag.edges():
        indeg[child] += 1
        adj[parent].append(child)
    queue = [p for p, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for child in adj[node]:
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    return seen == len(dag.nodes)


def test_random_models_structural_properties():
    for seed in range(N_SEEDS):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        ctx = f"seed {seed}"

        assert validate_dag(dag) == [], ctx
        assert _toposort_ok(dag), ctx

        for node in dag.walk():
            if node.gate is Gate.AND:
                assert node.kind is NodeKind.THREAT_SOURCE, ctx

        expected = expected_node_count(fe, model, study, kb, config)
        assert len(dag.nodes) == expected, f"{ctx}: {len(dag.nodes)} != {expected}"

        again = generate(fe, model, study, kb, config)
        assert again.to_text() == dag.to_text(), ctx


def test_kb_completeness_per_entry_point():
    """children(entry) as a set equals the KB filter for its type(s):
    no omissions, no extras."""
    for seed in range(40):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        for node in dag.walk():
            if node.kind is not NodeKind.ENTRY_POINT:
                continue
            got = {c.segment() for c in node.children
                   if c.kind is NodeKind.THREAT}
            entry_id = node.provenance[0]
            if model.has_interface(entry_id):
                targets = {t.id for t in kb.structural_types()
                           if t.interface_entry}
            else:
                tag = kb.type(study.asset_type_tags[entry_id])
                if tag.composite and "#" in node.segment():
                    targets = {node.provenance[1]}
                else:
                    targets = set(kb.effective_types(tag.id))
            expected = {t.code for t in kb.threats
                        if t.targeted_type in targets
                        and fe.criterion in t.criteria}
            assert got == expected, f"seed {seed} at {node.path}"


def test_chain_fidelity_of_entry_points():
    for seed in range(40):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        chain = model.chain_for_process(study.primary_asset(fe.primary_asset).process)
        allowed = set(chain.components) | {
            i.id for i in model.network_entry_points(chain, study, kb)}
        for node in dag.walk():
            if node.kind is NodeKind.ENTRY_POINT:
                assert node.provenance[0] in allowed, f"seed {seed}"


def test_no_rejected_threat_source_nodes():
    from attacktree.dag import VERDICT_PREFIX

    for seed in range(40):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        for node in dag.walk():
            if node.kind is NodeKind.THREAT_SOURCE:
                verdicts = [p for p in node.provenance
                            if p.startswith(VERDICT_PREFIX)]
                assert len(verdicts) == 1
                assert "rejected" not in verdicts[0], f"seed {seed}"


def test_kb_monotonicity_adding_threats_only_adds():
    rng = random.Random(99)
    for seed in range(30):
        fe, model, study, kb, config = random_setup(seed)
        before = generate(fe, model, study, kb, config)
        extra = ThreatDef(
            "T-NEW", "Added threat", rng.choice(["HW", "SW", "ORG", "PEOPLE"]),
            (fe.criterion,))
        bigger = KnowledgeBase(asset_types=list(kb.asset_types),
                               criteria=list(kb.criteria),
                               threats=list(kb.threats) + [extra])
        after = generate(fe, model, study, bigger, config)
        missing = set(before.nodes) - set(after.nodes)
        assert missing == set(), f"seed {seed}: {missing}"
        assert set(before.nodes) <= set(after.nodes)


def test_label_purity_under_name_permutation():
    """Renaming artefacts outside a node's provenance never changes its
    label; renaming one inside does (whenever the name is displayed)."""
    import dataclasses

    for seed in range(20):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        # permute every component display name
        renamed = dataclasses.replace  # noqa: F841 (kept for clarity)
        new_components = [dataclasses.replace(c, name=f"{c.name} PERM")
                          for c in model.components]
        permuted = dataclasses.replace(model, components=new_components)
        permuted.__post_init__()
        component_ids = {c.id for c in model.components}
        for node in dag.walk():
            fresh = synth_label(node, permuted, study, kb)
            carries = any(p in component_ids for p in node.provenance)
            if not carries:
                assert fresh == node.label, f"seed {seed} at {node.path}"


def test_rename_invariance_of_structure():
    """A rename-only change yields an isomorphic DAG with identical paths."""
    import dataclasses

    for seed in range(20):
        fe, model, study, kb, config = random_setup(seed)
        before = generate(fe, model, study, kb, config)
        new_entities = [dataclasses.replace(e, name=e.name + " Renamed")
                        for e in model.entities]
        renamed = dataclasses.replace(model, entities=new_entities)
        renamed.__post_init__()
        after, report = regenerate(fe, renamed, study, kb, config, before, {})
        assert set(before.nodes) == set(after.nodes), f"seed {seed}"
        assert report.warned_paths == [] and report.removed_paths == []
        assert report.added_paths == []
        assert [after.edges(), [n.kind for n in after.walk()]] == \
            [before.edges(), [n.kind for n in before.walk()]]


def test_regen_annotation_conservation_random():
    """Every overlay entry either re-attaches or is reported orphaned."""
    from attacktree.dag import Annotation

    rng = random.Random(5)
    for seed in range(20):
        fe, model, study, kb, config = random_setup(seed)
        dag = generate(fe, model, study, kb, config)
        paths = sorted(dag.nodes)
        overlay = {p: Annotation("open", f"note {i}")
                   for i, p in enumerate(rng.sample(paths,
                                                    min(4, len(paths))))}
        overlay["ghost/path"] = Annotation("closed")
        n_before = len(overlay)
        fe2, model2, study2, kb2, _ = random_setup(seed + 1000)
        # regenerate against a *different* random model of the same shape
        new_dag, report = regenerate(fe, model, study, kb, config, dag, overlay)
        assert len(overlay) == n_before
        for p in overlay:
            assert (p in new_dag.nodes) or (p in report.orphaned_annotations)
