import json

import pytest

from facetrank.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--docs", "400", "--queries", "12", "--noise", "0.3", "--seed", "5",
                 "--out-dir", str(root / "data")]) == 0
    assert main(["build-index", "--corpus", str(root / "data" / "corpus.jsonl"), "--out", str(root / "idx")]) == 0
    return root


def _run_stages(root, tag):
    out = root / tag
    args = dict(idx=root / "idx", topics=root / "data" / "topics.jsonl", qrels=root / "data" / "qrels.tsv")
    assert main(["candidates", "--index", str(args["idx"]), "--topics", str(args["topics"]),
                 "--out", str(out / "candidates.tsv")]) == 0
    assert main(["extract", "--index", str(args["idx"]), "--topics", str(args["topics"]),
                 "--candidates", str(out / "candidates.tsv"), "--qrels", str(args["qrels"]),
                 "--out", str(out / "features.tsv")]) == 0
    assert main(["train", "--features", str(out / "features.tsv"), "--max-trees", "25", "--seed", "1",
                 "--out", str(out / "model.json")]) == 0
    assert main(["rank", "--model", str(out / "model.json"), "--features", str(out / "features.tsv"),
                 "--out", str(out / "run.tsv")]) == 0
    return out


def test_stage_outputs(workdir):
    out = _run_stages(workdir, "a")
    cand = (out / "candidates.tsv").read_text().splitlines()
    first = cand[0].split("\t")
    assert len(first) == 5 and first[3] == "1"
    assert max(int(line.split("\t")[3]) for line in cand) == 100
    header, row = (out / "features.tsv").read_text().splitlines()[:2]
    cols = header.split("\t")
    assert cols[:4] == ["qid", "facet", "value", "label"] and "QP.DFIDFAll" in cols
    assert len(row.split("\t")) == len(cols)
    model = json.loads((out / "model.json").read_text())
    assert set(model) == {"f0", "shrinkage", "best_iteration", "feature_names", "trees"}
    run = (out / "run.tsv").read_text().splitlines()
    assert run[0].split("\t")[3] == "1" and run[0].endswith("\tgbt")


def test_rerun_is_byte_identical(workdir):
    a, b = _run_stages(workdir, "a"), _run_stages(workdir, "b")
    for name in ("candidates.tsv", "features.tsv", "model.json", "run.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_synth_rerun_is_byte_identical(tmp_path):
    for d in ("x", "y"):
        assert main(["synth", "--docs", "200", "--queries", "10", "--seed", "9", "--out-dir", str(tmp_path / d)]) == 0
    for name in ("corpus.jsonl", "topics.jsonl", "qrels.tsv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_eval_perfect_run(workdir, tmp_path, capsys):
    qrels = workdir / "data" / "qrels.tsv"
    rows = [line.split("\t") for line in qrels.read_text().splitlines()]
    by_q = {}
    for qid, facet, value, _ in rows:
        by_q.setdefault(qid, []).append((facet, value))
    run = tmp_path / "run.tsv"
    run.write_text("".join(f"{q}\t{f}\t{v}\t{i}\t{1.0 / i}\tperfect\n"
                           for q, keys in by_q.items() for i, (f, v) in enumerate(keys, start=1)))
    capsys.readouterr()
    assert main(["eval", "--run", str(run), "--qrels", str(qrels)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["map"] == 1.0 and report["p_r1"] == 1.0
    assert set(report) == {"map", "r_prec", "p5", "p_r1", "per_query", "folds"}


def test_cv_and_ttest(workdir, tmp_path, capsys):
    out = tmp_path / "cv.json"
    assert main(["cv", "--index", str(workdir / "idx"), "--topics", str(workdir / "data" / "topics.jsonl"),
                 "--qrels", str(workdir / "data" / "qrels.tsv"), "--folds", "3", "--max-trees", "20",
                 "--seed", "2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert len(report["folds"]) == 3 and len(report["per_query"]) == 12
    assert report["best_baseline"] in report["baselines"] and len(report["baselines"]) == 12
    assert report["config"]["max_trees"] == 20 and report["config"]["k"] == 100
    best = report["baselines"][report["best_baseline"]]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({"per_query": report["per_query"]}))
    b.write_text("".join(f"{q}\t{v}\n" for q, v in best["per_query"].items()))
    capsys.readouterr()
    assert main(["ttest", "--per-query-a", str(a), "--per-query-b", str(b)]) == 0
    result = json.loads(capsys.readouterr().out)
    if report["ttest"]["t"] is not None:
        assert result["t"] == pytest.approx(report["ttest"]["t"])


def test_protocol_defaults(capsys):
    assert main(["config"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["pool_size"] == 100 and cfg["folds"] == 10
    assert cfg["gbt"]["max_trees"] == 3000


def test_errors_leave_no_output(tmp_path, capsys):
    bad = tmp_path / "corpus.jsonl"
    bad.write_text('{"id": "d1", "facets": []}\nnope\n')
    assert main(["build-index", "--corpus", str(bad), "--out", str(tmp_path / "idx")]) == 1
    assert "corpus.jsonl:2" in capsys.readouterr().err
    assert not (tmp_path / "idx").exists()
    assert main(["candidates", "--index", str(tmp_path / "missing"), "--topics", str(bad),
                 "--out", str(tmp_path / "c.tsv")]) == 1
    assert not (tmp_path / "c.tsv").exists()
    assert "facetrank: error" in capsys.readouterr().err


def test_rank_rejects_mismatched_features(workdir, tmp_path):
    out = _run_stages(workdir, "c")
    feats = (out / "features.tsv").read_text().splitlines()
    header = feats[0].split("\t")
    header[-1] = "Renamed"
    broken = tmp_path / "f.tsv"
    broken.write_text("\n".join(["\t".join(header)] + feats[1:]) + "\n")
    assert main(["rank", "--model", str(out / "model.json"), "--features", str(broken),
                 "--out", str(tmp_path / "run.tsv")]) == 1
    assert not (tmp_path / "run.tsv").exists()
