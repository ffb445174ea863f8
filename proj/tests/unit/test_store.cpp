#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "../support/oracle.hpp"
#include "learnrec/error.hpp"
#include "learnrec/store.hpp"

using namespace learnrec;
using store::Store;

namespace {

Interaction click(std::string u, std::string r, std::int64_t t) { return Interaction{std::move(u), std::move(r), t}; }

std::vector<std::string> posting_ids(const store::StoreSnapshot& s, std::string_view term) {
  std::vector<std::string> out;
  for (auto r : s.postings(term)) out.push_back(s.resource_id(r));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("popularity counts every event, pairs are distinct") {
  Store st;
  st.add_interaction(click("u1", "r1", 1));
  st.add_interaction(click("u2", "r1", 2));
  st.add_interaction(click("u1", "r2", 3));
  st.add_interaction(click("u1", "r2", 4));
  const auto s = st.snapshot();
  CHECK(s.popularity(*s.find_resource("r1")) == 2);
  CHECK(s.popularity(*s.find_resource("r2")) == 2);
  const auto u1 = *s.find_user("u1");
  CHECK(s.user_items(u1).size() == 2);
  CHECK(s.interaction_count(u1) == 3);
  CHECK(s.resource_users(*s.find_resource("r2")).size() == 1);
}

TEST_CASE("interactions auto-register stub resources") {
  Store st;
  st.add_interaction(click("u1", "r9", 1));
  const auto s = st.snapshot();
  REQUIRE(s.find_resource("r9"));
  CHECK(s.resource("r9") == nullptr);
  CHECK(s.term_vector(*s.find_resource("r9")).empty());
  CHECK(s.document_count() == 0);
}

TEST_CASE("validation errors") {
  Store st;
  CHECK_THROWS_AS(st.add_interaction(click("", "r1", 1)), ValidationError);
  CHECK_THROWS_AS(st.add_interaction(click("u1", "", 1)), ValidationError);
  CHECK_THROWS_AS(st.add_interaction(click("u1", "r1", -1)), ValidationError);
  CHECK_THROWS_AS(st.add_resource(Resource{"", "t", "d", {}}), ValidationError);
  CHECK_THROWS_AS(st.add_tag_assignment(TagAssignment{"u1", "r1", "   ", 1}), ValidationError);
  CHECK(st.snapshot().stats().n_interactions == 0);
}

TEST_CASE("average interactions per user 7/3") {
  Store st;
  const char* users[] = {"a", "a", "a", "b", "b", "c", "c"};
  for (int i = 0; i < 7; ++i) st.add_interaction(click(users[i], "r" + std::to_string(i), i));
  const DatasetStats stats = st.compute_stats();
  CHECK(stats.n_interactions == 7);
  CHECK(stats.n_users == 3);
  CHECK(std::round(stats.avg_interactions_per_user * 100) / 100 == doctest::Approx(2.33));
}

TEST_CASE("Table 1 arithmetic") {
  const auto s = DatasetStats::from_counts(1879761, 1274858, 35346, 485295);
  CHECK(std::abs(s.avg_interactions_per_user - 1.47) < 0.01);
  CHECK(std::abs(s.avg_interactions_per_resource - 53.18) < 0.01);
  CHECK(std::abs(s.avg_tags_per_resource - 13.73) < 0.01);
}

TEST_CASE("empty store stats are zero") {
  Store st;
  CHECK(st.compute_stats() == DatasetStats{});
}

TEST_CASE("resource postings and replace semantics") {
  Store st;
  st.add_resource(Resource{"r1", "", "algebra lineal basica", {}});
  auto s = st.snapshot();
  for (const char* term : {"algebra", "lineal", "basica"}) CHECK(posting_ids(s, term) == std::vector<std::string>{"r1"});

  st.add_resource(Resource{"r1", "", "geometria plana", {}});
  s = st.snapshot();
  CHECK(posting_ids(s, "algebra").empty());
  CHECK(posting_ids(s, "geometria") == std::vector<std::string>{"r1"});
  CHECK(s.stats().n_resources == 1);

  st.add_resource(Resource{"r2", "", "", {}});
  s = st.snapshot();
  CHECK(s.find_resource("r2"));
  CHECK(s.term_vector(*s.find_resource("r2")).empty());
}

TEST_CASE("title and categories are indexed") {
  Store st;
  st.add_resource(Resource{"r1", "Mapa Mundi", "", {"Historia"}});
  const auto s = st.snapshot();
  CHECK(posting_ids(s, "mapa") == std::vector<std::string>{"r1"});
  CHECK(posting_ids(s, "historia") == std::vector<std::string>{"r1"});
}

TEST_CASE("tags are normalized and duplicates collapse") {
  Store st;
  st.add_tag_assignment(TagAssignment{"u1", "r1", "Mapa", 1});
  st.add_tag_assignment(TagAssignment{"u1", "r1", " mapa ", 2});
  st.add_tag_assignment(TagAssignment{"u2", "r1", "rio", 3});
  const auto s = st.snapshot();
  CHECK(s.find_tag("mapa"));
  CHECK_FALSE(s.find_tag("Mapa"));
  CHECK(s.assignment_count("u1", "r1", "mapa") == 2);
  const auto stats = s.stats();
  CHECK(stats.n_tag_assignments == 2);
  CHECK(stats.avg_tags_per_resource == doctest::Approx(2.0));
  CHECK(s.user_tags(*s.find_user("u1")).size() == 1);
}

TEST_CASE("user history order") {
  Store st;
  st.add_interaction(click("u", "c", 3));
  st.add_interaction(click("u", "a", 1));
  st.add_interaction(click("u", "b", 2));
  st.add_interaction(click("u", "x", 2));
  const auto h = st.get_user_history("u");
  REQUIRE(h.size() == 4);
  CHECK(h[0].resource_id == "a");
  CHECK(h[1].resource_id == "b");
  CHECK(h[2].resource_id == "x");
  CHECK(h[3].resource_id == "c");
  CHECK(st.get_user_history("nobody").empty());
}

TEST_CASE("text similarity") {
  Store st;
  st.add_resource(Resource{"a", "", "river delta water", {}});
  st.add_resource(Resource{"b", "", "river delta water", {}});
  st.add_resource(Resource{"c", "", "algebra matrix", {}});
  st.add_resource(Resource{"d", "", "", {}});
  CHECK(st.text_similarity("a", "b") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(st.text_similarity("a", "c") == 0.0);
  CHECK(st.text_similarity("a", "d") == 0.0);
  CHECK_THROWS_AS(st.text_similarity("a", "missing"), NotFoundError);
}

TEST_CASE("text similarity matches the TF-IDF oracle on a toy corpus") {
  const std::vector<std::pair<std::string, std::string>> docs = {
      {"d1", "the river flows to the sea. the sea is salty"},
      {"d2", "a river of numbers: matrix algebra and the sea of vectors"},
      {"d3", "salty snacks and river fish"},
  };
  Store st;
  for (const auto& [id, text] : docs) st.add_resource(Resource{id, "", text, {}});
  const auto vecs = oracle::tfidf(docs);
  for (const auto& [a, _] : docs) {
    for (const auto& [b, __] : docs) {
      CHECK(std::abs(st.text_similarity(a, b) - oracle::cosine(vecs.at(a), vecs.at(b))) < 1e-9);
      CHECK(st.text_similarity(a, b) == doctest::Approx(st.text_similarity(b, a)).epsilon(1e-15));
    }
  }
}

TEST_CASE("term vector norms") {
  Store st;
  st.add_resource(Resource{"a", "", "alpha beta beta gamma", {}});
  st.add_resource(Resource{"b", "", "beta delta", {}});
  const auto s = st.snapshot();
  for (store::ResourceIndex r = 0; r < s.resource_count(); ++r) {
    const auto& v = s.term_vector(r);
    double sq = 0;
    for (const auto& [t, w] : v.weights) {
      CHECK(w >= 0.0);
      sq += w * w;
    }
    CHECK(std::abs(v.norm - std::sqrt(sq)) <= 1e-9 * std::sqrt(sq));
  }
}

TEST_CASE("complexity is min-max normalized over described resources") {
  Store st;
  const std::string t1 = "Short one. Tiny.";
  const std::string t2 = "A considerably longer sentence with elaborate vocabulary everywhere.";
  const std::string t3 = "Medium sized words here. And again there.";
  st.add_resource(Resource{"r1", "", t1, {}});
  st.add_resource(Resource{"r2", "", t2, {}});
  st.add_resource(Resource{"r3", "", t3, {}});
  st.add_resource(Resource{"r4", "title only", "", {}});
  const auto s = st.snapshot();
  const double raw[] = {oracle::raw_complexity(t1), oracle::raw_complexity(t2), oracle::raw_complexity(t3)};
  const double lo = *std::min_element(std::begin(raw), std::end(raw));
  const double hi = *std::max_element(std::begin(raw), std::end(raw));
  for (int i = 0; i < 3; ++i) {
    const auto r = *s.find_resource("r" + std::to_string(i + 1));
    CHECK(std::abs(s.raw_complexity(r) - raw[i]) < 1e-9);
    CHECK(std::abs(s.complexity(r) - (raw[i] - lo) / (hi - lo)) < 1e-9);
  }
  CHECK(s.complexity(*s.find_resource("r2")) == 1.0);
  CHECK(s.complexity(*s.find_resource("r4")) == 0.0);
}

TEST_CASE("writes become visible within the refresh bound") {
  Store st(store::StoreOptions{std::chrono::milliseconds(50)});
  st.add_interaction(click("u1", "r1", 1));
  st.refresh();
  const auto v1 = st.snapshot().version();
  st.add_interaction(click("u1", "r2", 2));
  std::this_thread::sleep_for(std::chrono::milliseconds(60));
  const auto s = st.snapshot();
  CHECK(s.version() > v1);
  CHECK(s.find_resource("r2"));
}

TEST_CASE("old snapshots are unaffected by later writes") {
  Store st;
  st.add_interaction(click("u1", "r1", 1));
  const auto before = st.snapshot();
  st.add_interaction(click("u1", "r2", 2));
  st.add_resource(Resource{"r1", "", "new text", {}});
  st.refresh();
  CHECK(before.stats().n_interactions == 1);
  CHECK_FALSE(before.find_resource("r2"));
  CHECK(before.postings("new").empty());
}

TEST_CASE("popularity equals replayed click count on random data") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    const Dataset d = oracle::random_dataset(rng, 30, 40);
    Store st;
    CHECK(st.ingest(d) == 0);
    const auto s = st.snapshot();
    const auto model = oracle::build(d);
    for (const auto& [rid, count] : model.popularity) CHECK(s.popularity(*s.find_resource(rid)) == count);
    for (const auto& [uid, items] : model.items) {
      const auto u = *s.find_user(uid);
      CHECK(s.user_items(u).size() == items.size());
      CHECK(s.user_items(u).size() <= s.interaction_count(u));
    }
    const auto stats = s.stats();
    CHECK(stats.n_users == model.users.size());
    CHECK(std::abs(stats.avg_interactions_per_user -
                   static_cast<double>(stats.n_interactions) / static_cast<double>(stats.n_users)) < 1e-12);
  }
}
