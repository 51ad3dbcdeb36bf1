import json

import pytest

import beliefbench as bb


@pytest.fixture(scope="module")
def desk():
    world = bb.synth_world(seed=42)
    corpus = bb.generate_corpus(world, facts=1000, seed=42)
    oracle = bb.fit_oracle(world, corpus)
    bench = bb.gen_cases(world, oracle, n_cases=40, seed=42)
    return world, corpus, oracle, bench


def test_version():
    assert bb.__version__.count(".") == 2


def test_corpus_counts(desk):
    world, corpus, _, _ = desk
    assert world.num_facts >= 1000
    stats = corpus.stats
    assert stats["atomic_sentences"] == 10 * corpus.num_facts
    assert stats["tf_sentences"] == 10 * corpus.num_facts
    docs = corpus.documents()
    assert len(docs) == stats["documents"]
    assert sum(len(d.split()) for d in docs) == stats["tokens"]


def test_oracle_queries_and_edits(desk):
    world, corpus, oracle, _ = desk
    truths = {(s, r): o for s, r, o, _, _ in world.facts()}
    subject, relation = corpus.facts()[0]
    truth = truths[(subject, relation)]
    dist = oracle.next_object(f"{subject} {relation}")
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    atom = f"{subject} {relation} {truth}"
    p = oracle.probability(atom)
    assert p == max(dist.values())
    assert oracle.probability(f'"{atom}" is') == p
    assert oracle.probability(f'"{atom}" is false') == pytest.approx(1 - p, abs=1e-15)

    target = min(dist, key=dist.get)
    edit = f"{subject} {relation} {target}"
    before = oracle.content_hash
    token = oracle.snapshot()
    n = oracle.min_weight(edit)
    oracle.edit(edit, n)
    assert oracle.probability(edit) >= 0.95
    oracle.restore(token)
    assert oracle.content_hash == before

    with pytest.raises(ValueError):
        oracle.probability("this is not a sentence")


def test_bench_file(desk, tmp_path):
    world, _, _, bench = desk
    lines = bench.to_jsonl(seed=42).splitlines()
    assert len(lines) == len(bench) + 1
    assert "header" in json.loads(lines[0])
    path = tmp_path / "bench.jsonl"
    bench.save(path, seed=42)
    assert bb.Bench.load(path, world).to_jsonl(seed=42) == bench.to_jsonl(seed=42)
    subsets = bench.subsets()
    assert len(subsets["all"]) == len(bench)


def assert_fixed_point(report):
    assert report["failed"] == 0
    for subset in report["subsets"]:
        if subset["cases"] == 0:
            continue
        for stage in ("pre", "post"):
            assert all(x == 1.0 for x in subset[stage]["gen_accuracy"])
            assert all(abs(x) <= 1e-9 for x in subset[stage]["prob_mae"])
            assert all(abs(x) <= 1e-9 for x in subset[stage]["logic_mae"])


def test_bayes_self_evaluation(desk):
    _, _, oracle, bench = desk
    report = bb.evaluate(bench, "bayes", oracle=oracle)
    assert report["evaluated"] == len(bench)
    assert_fixed_point(report)
    assert "All Edit Requests" in bb.report_text(report)


def test_memorizer_recalls_training_facts(desk):
    _, corpus, _, bench = desk
    report = bb.evaluate(bench, "memorizer", corpus=corpus, subsets=["all"])
    assert report["subsets"][0]["pre"]["gen_accuracy"][0] == 1.0


def test_python_callable_model(desk):
    _, _, oracle, bench = desk
    snapshots = []

    def model(query):
        kind = query["kind"]
        if kind == "next_object":
            return {"probability": oracle.next_object(query["prompt"]).get(query["candidate"], 0.0)}
        if kind == "generate":
            dist = oracle.next_object(query["prompt"])
            return {"text": max(dist, key=dist.get)}
        if kind == "truth":
            return {"probability": oracle.probability(query["prompt"])}
        if kind == "edit":
            snapshots.append(oracle.snapshot())
            oracle.edit(f'{query["prompt"]} {query["candidate"]}', query["weight"])
            return {}
        oracle.restore(snapshots.pop())
        return {}

    report = bb.evaluate(bench, model)
    assert report["model"] == "python"
    assert_fixed_point(report)
    assert not snapshots


def test_failing_callable_marks_cases_failed(desk):
    _, _, _, bench = desk

    def broken(query):
        raise RuntimeError("no answer")

    report = bb.evaluate(bench, broken, subsets=["all"])
    assert report["failed"] == len(bench)
    assert report["evaluated"] + report["failed"] == report["total"]
    assert report["subsets"][0]["pre"]["gen_accuracy"][0] is None


def test_oracle_and_world_files(desk, tmp_path):
    world, _, oracle, _ = desk
    oracle.save(tmp_path / "oracle.txt")
    assert bb.Oracle.load(tmp_path / "oracle.txt").content_hash == oracle.content_hash
    world.save(tmp_path / "world.txt")
    assert bb.World.load(tmp_path / "world.txt").num_facts == world.num_facts
    with pytest.raises(ValueError, match="not found"):
        bb.Oracle.load(tmp_path / "missing.txt")
