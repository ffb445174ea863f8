#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "learnrec/cli.hpp"
#include "learnrec/io.hpp"

using namespace learnrec;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synth is deterministic and stats reads it back") {
  const auto dir = temp_dir("learnrec_cli_synth");
  REQUIRE(run({"synth", "--seed", "7", "--users", "300", "--resources", "60", "--topics", "5", "--out",
               (dir / "a").string()})
              .code == 0);
  REQUIRE(run({"synth", "--seed", "7", "--users", "300", "--resources", "60", "--topics", "5", "--out",
               (dir / "b").string()})
              .code == 0);
  for (const char* f : {"interactions.csv", "resources.jsonl", "tags.csv", "manifest.json"}) {
    CHECK(io::read_file(dir / "a" / f) == io::read_file(dir / "b" / f));
  }
  const Run stats = run({"stats", "--data", (dir / "a").string()});
  CHECK(stats.code == 0);
  CHECK(stats.out.rfind("n_interactions\tn_users\t", 0) == 0);

  const Run ev = run({"eval", "--data", (dir / "a").string(), "--algorithms", "uc1,uc2,uc3", "--test-fraction",
                      "0.2", "--out", (dir / "report.csv").string()});
  CHECK(ev.code == 0);
  const std::string csv = io::read_file(dir / "report.csv");
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].rfind("uc1,UC1: MP,", 0) == 0);
  CHECK(rows[1].find(",1.0000,") != std::string::npos);
  CHECK(ev.out.find("UC3: CF_t") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("recommend prints TSV") {
  const auto dir = temp_dir("learnrec_cli_rec");
  io::write_file(dir / "i.csv", "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\nu1,r2,2,click\nu2,r1,3,click\n"
                                "u2,r2,4,click\nu2,r3,5,click\n");
  const Run r = run({"recommend", "--interactions", (dir / "i.csv").string(), "--algorithm", "cf", "--user", "u1"});
  CHECK(r.code == 0);
  CHECK(r.out == "rank\tresource_id\tscore\n1\tr3\t0.816497\n");
  fs::remove_all(dir);
}

TEST_CASE("ingest reports bad records and writes the good ones") {
  const auto dir = temp_dir("learnrec_cli_ingest");
  io::write_file(dir / "i.csv", "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\n,r2,2,click\n");
  Run r = run({"ingest", "--interactions", (dir / "i.csv").string(), "--out", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find(":3:") != std::string::npos);
  CHECK(io::read_manifest(dir / "out").stats.n_interactions == 1);

  io::write_file(dir / "ok.csv", "user_id,resource_id,timestamp_ms,kind\nu1,r1,1,click\n");
  r = run({"ingest", "--interactions", (dir / "ok.csv").string()});
  CHECK(r.code == 0);
  fs::remove_all(dir);
}

TEST_CASE("profile subcommands") {
  const auto dir = temp_dir("learnrec_cli_profile");
  const auto file = (dir / "profiles.json").string();
  Run r = run({"profile", "set", "cf-default", "--json", R"({"n": 5})", "--out", file});
  CHECK(r.code == 0);
  r = run({"profile", "--profiles", file, "show", "cf-default"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"n\": 5") != std::string::npos);
  r = run({"profile", "set", "cf-default", "--json", R"({"lambda": 3})", "--out", file});
  CHECK(r.code == 1);
  r = run({"profile", "show", "nope"});
  CHECK(r.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  Run r = run({});
  CHECK(r.code == 1);
  r = run({"stats", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = run({"stats", "--interactions", "/nonexistent/file.csv"});
  CHECK(r.code == 2);
  r = run({"stats"});
  CHECK(r.code == 1);
  r = run({"eval", "--interactions", "/nonexistent/file.csv"});
  CHECK(r.code == 2);
  r = run({"--help"});
  CHECK(r.code == 0);
}
