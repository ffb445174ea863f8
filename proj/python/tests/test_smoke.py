import math

import pytest

import learnrec


def small_recommender():
    rec = learnrec.Recommender(refresh_ms=0)
    rec.add_interaction("u1", "r1", 1)
    rec.add_interaction("u1", "r2", 2)
    rec.add_interaction("u2", "r1", 3)
    rec.add_interaction("u2", "r2", 4)
    rec.add_interaction("u2", "r3", 5)
    rec.add_interaction("u3", "r4", 6)
    rec.refresh()
    return rec


def test_cf_interactions_scores_the_shared_neighbor():
    out = small_recommender().recommend("cf", user="u1", k=10)
    assert [rid for rid, _ in out["items"]] == ["r3"]
    assert out["items"][0][1] == pytest.approx(2 / math.sqrt(6), abs=1e-12)
    assert out["algorithm_id"] == "uc2"
    assert not out["cold_start"]


def test_unknown_user_is_cold_start():
    out = small_recommender().recommend("cf", user="nobody")
    assert out["items"] == []
    assert out["cold_start"]


def test_popular_counts_events():
    out = small_recommender().recommend("popular", k=2)
    assert [rid for rid, _ in out["items"]] == ["r1", "r2"]


def test_invalid_k_raises_value_error():
    with pytest.raises(ValueError):
        small_recommender().recommend("popular", k=0)


def test_profile_update_bumps_version():
    rec = small_recommender()
    assert rec.get_profile("cf-default")["version"] == 1
    assert rec.set_profile("cf-default", {"n": 5}) == 2
    out = rec.recommend("cf", user="u1")
    assert out["profile_version"] == 2


def test_metrics():
    assert learnrec.ndcg_at_k(["a", "x", "b"], {"a", "b"}, 20) == pytest.approx(1.5 / (1 + 1 / math.log2(3)), abs=1e-12)
    assert learnrec.mrr_at_k(["x", "y", "a"], {"a"}, 20) == pytest.approx(1 / 3)


def test_synthesize_and_evaluate(tmp_path):
    stats = learnrec.synthesize(tmp_path / "syn", seed=7, users=300, resources=60, topics=5)
    assert stats["n_users"] == 300
    again = learnrec.synthesize(tmp_path / "again", seed=7, users=300, resources=60, topics=5)
    assert (tmp_path / "syn" / "interactions.csv").read_bytes() == (tmp_path / "again" / "interactions.csv").read_bytes()
    assert stats == again

    report = learnrec.evaluate(data_dir=tmp_path / "syn")
    assert [r["algorithm_id"] for r in report["rows"]] == ["uc1", "uc2", "uc3"]
    assert report["rows"][0]["coverage"] == 1.0
    assert report["csv"].startswith("algorithm,name,")

    rec = learnrec.Recommender()
    assert rec.load(data_dir=tmp_path / "syn") == 0
    rec.refresh()
    assert rec.stats()["n_interactions"] == stats["n_interactions"]


def test_missing_file_raises_os_error(tmp_path):
    with pytest.raises(OSError):
        learnrec.Recommender().load(interactions=tmp_path / "missing.csv")
