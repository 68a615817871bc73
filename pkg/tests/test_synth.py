import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetrank.corpus import tokenize
from facetrank.evaluation.crossval import cross_validate
from facetrank.facets import enumerate_fvps
from facetrank.gbt import GbtConfig
from facetrank.pipeline import Workspace, candidate_pools, extract_instances
from facetrank.synth import SynthConfig, generate_synthetic


def small(**kw):
    base = dict(num_docs=300, num_queries=12, seed=3)
    base.update(kw)
    return SynthConfig(**base)


def test_noise_free_titles_spell_out_relevant_values():
    docs, topics, qrels = generate_synthetic(small(noise=0.0))
    for topic in topics:
        values = [v for (q, _, v) in qrels if q == topic.qid]
        assert sorted(tokenize(topic.title)) == sorted(t for v in values for t in tokenize(v))


def test_deterministic_per_seed():
    assert generate_synthetic(small()) == generate_synthetic(small())
    assert generate_synthetic(small()) != generate_synthetic(small(seed=4))


def test_qrels_bounds_and_planting():
    docs, topics, qrels = generate_synthetic(small(num_queries=30, num_docs=600))
    assert 60 <= len(qrels) <= 120
    keys = {f.key for f in enumerate_fvps(docs)[0]}
    for (qid, facet, value), rel in qrels.items():
        assert rel == 1 and (facet, value) in keys
    assert {q for q, _, _ in qrels} == {t.qid for t in topics}


def test_invalid_configs():
    with pytest.raises(ValueError):
        small(num_queries=5)
    with pytest.raises(ValueError):
        small(noise=1.0)
    with pytest.raises(ValueError):
        small(relevant_fvps_per_query=(2, 400))


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 0.9))
def test_synthetic_data_survives_the_pipeline(seed, noise):
    docs, topics, qrels = generate_synthetic(small(seed=seed, noise=noise))
    ws = Workspace.from_documents(docs)
    pools = {p.qid: p.candidates for p in candidate_pools(topics, ws, 100)}
    insts = extract_instances(topics, pools, ws)
    result = cross_validate(insts, qrels, ws.feature_names(), GbtConfig(max_trees=5), folds=10, seed=seed)
    assert len(result.gbt.per_query_ap) == 12
