#include <doctest.h>

#include <filesystem>
#include <random>

#include "learnrec/error.hpp"
#include "learnrec/io.hpp"
#include "learnrec/store.hpp"
#include "learnrec/synth.hpp"

using namespace learnrec;
namespace fs = std::filesystem;

TEST_CASE("interactions csv") {
  const auto r = io::parse_interactions_csv(
      "user_id,resource_id,timestamp_ms,kind\n"
      "u1,r1,10,click\n"
      ",r2,11,click\n"
      "u3,r3,-5,click\n"
      "u4,r4,abc,click\n"
      "u5,r5,12,like\n"
      "u6,r6,13\n"
      "\n"
      "\"u,7\",r7,14,click\n");
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].user_id == "u1");
  CHECK(r.records[1].user_id == "u,7");
  REQUIRE(r.errors.size() == 5);
  CHECK(r.errors[0].line == 3);
  CHECK(r.errors[4].line == 7);
  CHECK_THROWS_AS(io::parse_interactions_csv("user,resource\nu,r\n"), ValidationError);
  CHECK_THROWS_AS(io::parse_interactions_csv(""), ValidationError);
}

TEST_CASE("resources jsonl") {
  const auto r = io::parse_resources_jsonl(
      "{\"resource_id\":\"r1\",\"title\":\"T\",\"description\":\"D\",\"categories\":[\"a\"]}\n"
      "{\"resource_id\":\"\"}\n"
      "not json\n"
      "{\"resource_id\":\"r2\"}\n");
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].categories == std::vector<std::string>{"a"});
  CHECK(r.records[1].title.empty());
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].line == 2);
  CHECK(r.errors[1].line == 3);
}

TEST_CASE("tags csv") {
  const auto r = io::parse_tags_csv(
      "user_id,resource_id,tag,timestamp_ms\n"
      "u1,r1,Mapa,5\n"
      "u1,r1,  ,6\n");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].tag == "mapa");
  CHECK(r.errors.size() == 1);
}

TEST_CASE("format and parse round trip") {
  Dataset d;
  d.interactions = {{"u,1", "r\"1", 5, InteractionKind::click}};
  d.resources = {{"r1", "Título", "Línea uno.\nDos", {"x", "y"}}};
  d.tags = {{"u1", "r1", "mapa", 3}};
  const auto i = io::parse_interactions_csv(io::format_interactions_csv(d.interactions));
  REQUIRE(i.records.size() == 1);
  CHECK(i.records[0].user_id == "u,1");
  CHECK(i.records[0].resource_id == "r\"1");
  const auto r = io::parse_resources_jsonl(io::format_resources_jsonl(d.resources));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].description == "Línea uno.\nDos");
  CHECK(io::parse_tags_csv(io::format_tags_csv(d.tags)).records.size() == 1);
}

TEST_CASE("read_dataset fails on bad records and missing files") {
  const auto dir = fs::temp_directory_path() / "learnrec_io_test";
  fs::create_directories(dir);
  io::write_file(dir / "bad.csv", "user_id,resource_id,timestamp_ms,kind\nu,,1,click\n");
  CHECK_THROWS_AS(io::read_dataset(io::DatasetPaths{dir / "bad.csv", {}, {}}), ValidationError);
  CHECK_THROWS_AS(io::read_dataset(io::DatasetPaths{dir / "nope.csv", {}, {}}), IoError);
  fs::remove_all(dir);
}

TEST_CASE("snapshot reload reproduces manifest stats") {
  const auto dir = fs::temp_directory_path() / "learnrec_snapshot_test";
  fs::remove_all(dir);
  synth::SynthConfig cfg;
  cfg.n_users = 300;
  cfg.n_resources = 50;
  cfg.n_topics = 5;
  const Dataset d = synth::generate_synthetic(cfg);
  store::Store st;
  st.ingest(d);
  const DatasetStats stats = st.refresh().stats();
  io::write_snapshot(dir, st.snapshot().export_dataset(), stats);
  const io::Manifest m = io::read_manifest(dir);
  CHECK(m.stats == stats);

  store::Store again;
  CHECK(again.ingest(io::read_snapshot(dir)) == 0);
  CHECK(again.compute_stats() == stats);
  fs::remove_all(dir);
}
