#include <doctest.h>

#include <set>

#include "learnrec/error.hpp"
#include "learnrec/io.hpp"
#include "learnrec/synth.hpp"

using namespace learnrec;

TEST_CASE("synthetic data is deterministic per seed") {
  synth::SynthConfig cfg;
  cfg.n_users = 200;
  cfg.seed = 7;
  const Dataset a = synth::generate_synthetic(cfg);
  const Dataset b = synth::generate_synthetic(cfg);
  CHECK(io::format_interactions_csv(a.interactions) == io::format_interactions_csv(b.interactions));
  CHECK(io::format_resources_jsonl(a.resources) == io::format_resources_jsonl(b.resources));
  CHECK(io::format_tags_csv(a.tags) == io::format_tags_csv(b.tags));
  cfg.seed = 8;
  CHECK(io::format_interactions_csv(synth::generate_synthetic(cfg).interactions) !=
        io::format_interactions_csv(a.interactions));
}

TEST_CASE("synthetic data shape") {
  synth::SynthConfig cfg;
  const Dataset d = synth::generate_synthetic(cfg);
  CHECK(d.resources.size() == cfg.n_resources);
  std::set<std::string> users;
  for (const auto& i : d.interactions) users.insert(i.user_id);
  CHECK(users.size() == cfg.n_users);
  for (std::size_t i = 1; i < d.interactions.size(); ++i) {
    CHECK(d.interactions[i - 1].timestamp_ms <= d.interactions[i].timestamp_ms);
  }
  CHECK_FALSE(d.tags.empty());
}

TEST_CASE("synthetic config validation") {
  synth::SynthConfig cfg;
  cfg.p_topic_click = 1.5;
  CHECK_THROWS_AS(synth::generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.q_topic_tag = 0.3;
  CHECK_THROWS_AS(synth::generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.n_topics = 0;
  CHECK_THROWS_AS(synth::generate_synthetic(cfg), ValidationError);
  cfg = {};
  cfg.activity_tail = 0;
  CHECK_THROWS_AS(synth::generate_synthetic(cfg), ValidationError);
}
