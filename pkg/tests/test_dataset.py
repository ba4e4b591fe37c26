"""Balancing, merging, sampling and serialization tests."""

import dataclasses

import pytest

from bioforge.dataset import (
    DatasetManifest,
    balance_other,
    compile_strategy,
    count_labels,
    merge_all,
    read_instances,
    render_counts_table,
    sample_gold,
    stats,
    write_instances,
)
from bioforge.ingest import ArticleRef, SentenceText
from bioforge.matcher import (
    LABEL_ORDER,
    RelationLabel,
    mark_entities,
)
from bioforge.records import PersonRecord
from bioforge.tagger import EntitySpan, TaggedSentence

from conftest import REFERENCE_DATE


def make_instance(serial: int, label=RelationLabel.OTHER, strategy="normal"):
    """A structurally valid instance with a unique sentence."""
    name = f"Person Number{serial}"
    value = f"Value Entry{serial}"
    text = f"{name} saw {value} there."
    sentence = TaggedSentence(
        article=ArticleRef(str(100 + serial), name),
        index=serial % 5,
        text=text,
        spans=[],
        strategy_origin=strategy if strategy != "skip" or serial % 5 else "normal",
    )
    person = EntitySpan(0, len(name), "PERSON", name)
    target = EntitySpan(text.index(value), text.index(value) + len(value), "PERSON", value)
    return mark_entities(sentence, person, target, label, strategy)


class TestBalanceOther:
    def test_min_rule_samples_pool(self):
        targeted = [make_instance(i, RelationLabel.BIRTHPLACE) for i in range(180)]
        pool = [make_instance(1000 + i) for i in range(500)]
        balanced = balance_other(targeted, pool, seed=13)
        counts = count_labels(balanced)
        assert counts[RelationLabel.OTHER] == 180
        assert counts[RelationLabel.BIRTHPLACE] == 180

    def test_short_pool_kept_whole(self, caplog):
        targeted = [make_instance(i, RelationLabel.BIRTHPLACE) for i in range(180)]
        pool = [make_instance(1000 + i) for i in range(120)]
        with caplog.at_level("WARNING"):
            balanced = balance_other(targeted, pool, seed=13)
        assert count_labels(balanced)[RelationLabel.OTHER] == 120
        assert "smaller than targeted" in caplog.text

    def test_deterministic_under_seed(self):
        targeted = [make_instance(i, RelationLabel.BIRTHDATE) for i in range(10)]
        pool = [make_instance(1000 + i) for i in range(50)]
        first = balance_other(targeted, pool, seed=7)
        second = balance_other(list(reversed(targeted)), list(reversed(pool)), seed=7)
        assert first == second
        assert balance_other(targeted, pool, seed=8) != first

    def test_disjointness_enforced(self):
        shared = make_instance(1)
        with pytest.raises(ValueError):
            balance_other([shared], [shared], seed=1)


class TestMergeAll:
    def test_identical_instance_across_strategies_appears_once(self):
        normal = make_instance(1, RelationLabel.BIRTHDATE, strategy="normal")
        skip = dataclasses.replace(normal, strategy="skip")
        assert normal.instance_id == skip.instance_id
        merged = merge_all([[normal], [skip]])
        assert len(merged) == 1
        assert merged[0].strategy == "normal"  # first strategy wins

    def test_disjoint_sets_concatenate(self):
        a = [make_instance(i, RelationLabel.BIRTHDATE) for i in range(3)]
        b = [make_instance(10 + i, RelationLabel.SIBLING) for i in range(4)]
        merged = merge_all([a, b])
        assert len(merged) == 7

    def test_union_equals_bruteforce(self):
        sets = [
            [make_instance(i, RelationLabel.BIRTHDATE) for i in (1, 2, 3)],
            [make_instance(i, RelationLabel.BIRTHDATE) for i in (2, 3, 4)],
            [make_instance(i, RelationLabel.BIRTHDATE) for i in (4, 5)],
        ]
        merged = merge_all(sets)
        expected_ids = {i.instance_id for group in sets for i in group}
        assert {i.instance_id for i in merged} == expected_ids
        assert len(merged) == 5


class TestStats:
    def test_hand_counted_fixture(self):
        instances = (
            [make_instance(i, RelationLabel.BIRTHDATE) for i in range(4)]
            + [make_instance(10 + i, RelationLabel.SIBLING) for i in range(3)]
            + [make_instance(20 + i, RelationLabel.OTHER) for i in range(5)]
        )
        manifest = stats(instances, strategy="normal", seed=0, config_digest="d")
        assert manifest.counts[RelationLabel.BIRTHDATE] == 4
        assert manifest.counts[RelationLabel.SIBLING] == 3
        assert manifest.counts[RelationLabel.OTHER] == 5
        assert manifest.counts[RelationLabel.DEATHDATE] == 0
        assert sum(manifest.counts.values()) == 12

    def test_empty_input_all_zero(self):
        manifest = stats([], strategy="normal")
        assert all(v == 0 for v in manifest.counts.values())

    def test_other_exceeding_targeted_rejected(self):
        counts = {l: 0 for l in LABEL_ORDER}
        counts[RelationLabel.OTHER] = 1
        with pytest.raises(ValueError):
            DatasetManifest(strategy="normal", counts=counts, seed=0,
                            config_digest="", created="now")

    def test_rendered_table_layout(self):
        columns = {
            "normal": {l: 0 for l in LABEL_ORDER},
            "coref": {l: 0 for l in LABEL_ORDER},
            "skip": {l: 0 for l in LABEL_ORDER},
        }
        columns["normal"][RelationLabel.BIRTHDATE] = 52083
        columns["coref"][RelationLabel.BIRTHDATE] = 48004
        columns["skip"][RelationLabel.BIRTHDATE] = 45366
        table = render_counts_table(columns)
        lines = table.splitlines()
        assert lines[0].split() == ["normal", "coref", "skip"]
        assert lines[1].split() == ["birthdate", "52,083", "48,004", "45,366"]
        assert [l.split()[0] for l in lines[1:]] == [lab.value for lab in LABEL_ORDER] + ["Total"]
        assert lines[-1].split() == ["Total", "52,083", "48,004", "45,366"]


class TestSampleGold:
    def make_sets(self):
        sets = {}
        for strategy in ("normal", "coref", "skip"):
            instances = []
            offset = {"normal": 0, "coref": 3000, "skip": 6000}[strategy]
            for li, label in enumerate(LABEL_ORDER):
                count = {"normal": 5, "coref": 4, "skip": 3}[strategy]
                for k in range(count):
                    instances.append(
                        dataclasses.replace(
                            make_instance(offset + li * 100 + k, label, strategy),
                        )
                    )
            sets[strategy] = instances
        return sets

    def test_full_cells(self):
        gold, shortfalls = sample_gold(self.make_sets(), n_per_relation=2, seed=5)
        assert len(gold) == 2 * 10 * 3
        assert not shortfalls

    def test_deterministic(self):
        first, _ = sample_gold(self.make_sets(), n_per_relation=2, seed=5)
        second, _ = sample_gold(self.make_sets(), n_per_relation=2, seed=5)
        assert first == second

    def test_shortfall_reported(self):
        sets = self.make_sets()
        sets["skip"] = [i for i in sets["skip"] if i.label is not RelationLabel.SIBLING][:1]
        gold, shortfalls = sample_gold(sets, n_per_relation=2, seed=5)
        reasons = {(s["set"], s["label"]) for s in shortfalls}
        assert ("skip", "sibling") in reasons

    def test_cells_disjoint_without_replacement(self):
        gold, _ = sample_gold(self.make_sets(), n_per_relation=3, seed=5)
        keys = [(g.strategy, g.instance_id) for g in gold]
        assert len(keys) == len(set(keys))


class TestSerialization:
    def test_native_round_trip(self, tmp_path):
        instances = [make_instance(i, RelationLabel.BIRTHDATE) for i in range(5)]
        path = tmp_path / "data.tsv"
        write_instances(instances, path)
        assert read_instances(path) == instances

    def test_markers_round_trip(self, tmp_path):
        instances = [make_instance(i, RelationLabel.HAS_CHILD) for i in range(5)]
        path = tmp_path / "data.markers.tsv"
        write_instances(instances, path, style="markers")
        text = path.read_text(encoding="utf-8")
        assert "[E1]" in text and "[/E1]" in text and "<e1>" not in text
        assert read_instances(path) == instances

    def test_marker_conversion_shape(self, tmp_path):
        instance = make_instance(1, RelationLabel.BIRTHPLACE)
        path = tmp_path / "m.tsv"
        write_instances([instance], path, style="markers")
        row = path.read_text(encoding="utf-8").splitlines()[1].split("\t")
        assert row[1] == (
            "[E1]Person Number1[/E1] saw [E2]Value Entry1[/E2] there."
        )

    def test_header_and_label_bytes(self, tmp_path):
        path = tmp_path / "d.tsv"
        write_instances([make_instance(1, RelationLabel.EDUCATED_AT)], path)
        content = path.read_text(encoding="utf-8")
        assert content.startswith(
            "instance_id\tmarked_text\tlabel\te1_surface\te2_surface\t"
            "person_slot\twiki_id\tsentence_index\tstrategy\ttitle\n"
        )
        assert "\teducatedAt\t" in content
        assert "\r" not in content

    def test_tab_in_field_rejected(self, tmp_path):
        instance = make_instance(1)
        broken = dataclasses.replace(
            instance, article=ArticleRef(instance.article.wiki_id, "bad\ttitle")
        )
        with pytest.raises(ValueError, match="TSV"):
            write_instances([broken], tmp_path / "x.tsv")


class TestCompileStrategy:
    def test_balancing_invariant_holds(self, mini_corpus):
        from bioforge.ingest import read_articles

        articles, _ = read_articles(mini_corpus["dump"], mini_corpus["store"].wiki_ids())
        for strategy in ("normal", "coref", "skip"):
            instances = compile_strategy(
                articles, mini_corpus["store"], strategy, seed=3, reference=REFERENCE_DATE
            )
            counts = count_labels(instances)
            targeted_total = sum(
                counts[l] for l in LABEL_ORDER if l is not RelationLabel.OTHER
            )
            assert counts[RelationLabel.OTHER] <= targeted_total

    def test_worker_independence(self, mini_corpus):
        from bioforge.ingest import read_articles

        articles, _ = read_articles(mini_corpus["dump"], mini_corpus["store"].wiki_ids())
        one = compile_strategy(articles, mini_corpus["store"], "normal",
                               seed=3, reference=REFERENCE_DATE, workers=1)
        four = compile_strategy(articles, mini_corpus["store"], "normal",
                                seed=3, reference=REFERENCE_DATE, workers=4)
        assert one == four
