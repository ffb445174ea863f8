#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <thread>

#include "learnrec/error.hpp"
#include "learnrec/io.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/recommender.hpp"

using namespace learnrec;
using profiles::Algorithm;
using profiles::ProfileRegistry;

TEST_CASE("default profiles") {
  const ProfileRegistry reg;
  const auto cf = reg.get("cf-default");
  CHECK(cf.n == 20);
  CHECK(cf.algorithm == Algorithm::cf_interactions);
  CHECK(reg.get("cf-tags").signal == engine::Signal::tags);
  CHECK(reg.get("goal-default").lambda == 0.5);
  for (const char* id : {"uc1-popular", "cf-default", "cf-tags", "cbf-default", "contextual-default", "goal-default"}) {
    CHECK(reg.get(id).version == 1);
  }
  CHECK_THROWS_AS(reg.get("nope"), NotFoundError);
  CHECK(reg.get("cf-default") == reg.get("cf-default"));
}

TEST_CASE("algorithm names") {
  CHECK(profiles::parse_algorithm("uc3") == Algorithm::cf_tags);
  CHECK(profiles::parse_algorithm("CBF") == Algorithm::content_based);
  CHECK(profiles::to_string(Algorithm::goal) == "uc7");
  CHECK(profiles::display_name(Algorithm::popular) == "UC1: MP");
  CHECK_THROWS_AS(profiles::parse_algorithm("uc8"), ValidationError);
}

TEST_CASE("set bumps the version; invalid updates leave the profile intact") {
  ProfileRegistry reg;
  auto p = reg.get("cf-default");
  p.n = 5;
  CHECK(reg.set(p) == 2);
  CHECK(reg.get("cf-default").n == 5);

  const auto before = reg.get("goal-default");
  auto bad = before;
  bad.lambda = 1.5;
  CHECK_THROWS_AS(reg.set(bad), ValidationError);
  CHECK(reg.get("goal-default") == before);
  bad = before;
  bad.n = 0;
  CHECK_THROWS_AS(reg.set(bad), ValidationError);
  CHECK(reg.get("goal-default") == before);
}

TEST_CASE("json round trip and merge") {
  const ProfileRegistry reg;
  const auto base = reg.get("goal-default");
  CHECK(profiles::profile_from_json(profiles::to_json(base), base) == base);
  const auto merged = profiles::profile_from_json(nlohmann::json{{"lambda", 0.25}, {"goal", "topic:rios"}}, base);
  CHECK(merged.lambda == 0.25);
  CHECK(merged.n == base.n);
  CHECK_THROWS_AS(profiles::profile_from_json(nlohmann::json{{"n", -3}}, base), ValidationError);
  CHECK_THROWS_AS(profiles::profile_from_json(nlohmann::json{{"signal", "likes"}}, base), ValidationError);
  CHECK_THROWS_AS(profiles::profile_from_json(nlohmann::json{{"goal", "faster"}}, base), ValidationError);
}

TEST_CASE("profiles file is applied atomically") {
  const auto dir = std::filesystem::temp_directory_path() / "learnrec_profiles_test";
  std::filesystem::create_directories(dir);
  ProfileRegistry reg;
  io::write_file(dir / "good.json", R"({"profiles": [{"profile_id": "cf-default", "n": 7}, {"profile_id": "mine", "algorithm_id": "uc4"}]})");
  reg.load_file(dir / "good.json");
  CHECK(reg.get("cf-default").n == 7);
  CHECK(reg.get("mine").algorithm == Algorithm::content_based);

  io::write_file(dir / "bad.json", R"([{"profile_id": "cf-default", "n": 9}, {"profile_id": "x", "lambda": 3}])");
  CHECK_THROWS_AS(reg.load_file(dir / "bad.json"), ValidationError);
  CHECK(reg.get("cf-default").n == 7);
  CHECK_THROWS_AS(reg.load_file(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent updates yield distinct monotone versions") {
  ProfileRegistry reg;
  std::vector<std::uint64_t> versions(100);
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i) {
    threads.emplace_back([&, i] {
      auto p = reg.get("cf-default");
      p.n = 1 + static_cast<std::size_t>(i);
      versions[static_cast<std::size_t>(i)] = reg.set(p);
    });
  }
  for (auto& t : threads) t.join();
  std::sort(versions.begin(), versions.end());
  for (std::size_t i = 0; i < versions.size(); ++i) CHECK(versions[i] == i + 2);
  CHECK(reg.get("cf-default").version == 101);
}

TEST_CASE("recommend echoes the profile version and honors n") {
  store::Store st;
  for (int v = 0; v < 30; ++v) {
    st.add_interaction(Interaction{"v" + std::to_string(v), "shared", v});
    st.add_interaction(Interaction{"v" + std::to_string(v), "own" + std::to_string(v), v});
  }
  st.add_interaction(Interaction{"u", "shared", 100});
  ProfileRegistry reg;
  RecommendRequest req;
  req.algorithm = Algorithm::cf_interactions;
  req.user = "u";
  auto list = recommend(st, reg, req);
  CHECK(list.profile_version == 1);
  CHECK(list.neighborhood_size == 20);

  auto p = reg.get("cf-default");
  p.n = 5;
  const auto v = reg.set(p);
  list = recommend(st, reg, req);
  CHECK(list.profile_version == v);
  CHECK(list.neighborhood_size == 5);
  CHECK(list.size() == 5);
}

TEST_CASE("request resolution") {
  RecommendRequest req;
  req.algorithm = Algorithm::cf_interactions;
  CHECK(resolve_profile_id(req) == "cf-default");
  req.signal = engine::Signal::tags;
  CHECK(resolve_profile_id(req) == "cf-tags");
  req.profile_id = "custom";
  CHECK(resolve_profile_id(req) == "custom");

  store::Store st;
  const ProfileRegistry reg;
  RecommendRequest missing;
  missing.algorithm = Algorithm::similar_resources;
  CHECK_THROWS_AS(recommend(st, reg, missing), ValidationError);
  missing.resource = "nothing";
  CHECK_THROWS_AS(recommend(st, reg, missing), NotFoundError);
}
