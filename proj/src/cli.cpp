#include "learnrec/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "learnrec/error.hpp"
#include "learnrec/evaluator.hpp"
#include "learnrec/io.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/recommender.hpp"
#include "learnrec/service.hpp"
#include "learnrec/store.hpp"
#include "learnrec/synth.hpp"

namespace learnrec::cli {
namespace fs = std::filesystem;

namespace {

struct DataFlags {
  std::string data_dir;
  std::string interactions;
  std::string resources;
  std::string tags;

  void attach(CLI::App& cmd) {
    cmd.add_option("--data", data_dir, "Dataset directory written by ingest or synth");
    cmd.add_option("--interactions", interactions, "interactions.csv path");
    cmd.add_option("--resources", resources, "resources.jsonl path");
    cmd.add_option("--tags", tags, "tags.csv path");
  }

  bool any() const { return !data_dir.empty() || !interactions.empty() || !resources.empty() || !tags.empty(); }

  Dataset load() const {
    if (!any()) throw ValidationError("no input: give --data or --interactions/--resources/--tags");
    Dataset dataset;
    if (!data_dir.empty()) dataset = io::read_snapshot(data_dir);
    const auto opt = [](const std::string& p) { return p.empty() ? std::nullopt : std::optional<fs::path>(p); };
    Dataset extra = io::read_dataset(io::DatasetPaths{opt(interactions), opt(resources), opt(tags)});
    dataset.interactions.insert(dataset.interactions.end(), extra.interactions.begin(), extra.interactions.end());
    dataset.resources.insert(dataset.resources.end(), extra.resources.begin(), extra.resources.end());
    dataset.tags.insert(dataset.tags.end(), extra.tags.begin(), extra.tags.end());
    return dataset;
  }
};

void load_profiles(profiles::ProfileRegistry& registry, const std::string& path) {
  if (!path.empty()) registry.load_file(path);
}

std::vector<profiles::Algorithm> parse_algorithm_list(const std::string& text) {
  std::vector<profiles::Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto a = profiles::parse_algorithm(item);
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  if (out.empty()) throw ValidationError("--algorithms is empty");
  return out;
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_avg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void print_stats(std::ostream& out, const DatasetStats& s) {
  out << "n_interactions\tn_users\tn_resources\tn_tag_assignments\tavg_interactions_per_user\t"
         "avg_interactions_per_resource\tavg_tags_per_resource\n";
  out << s.n_interactions << '\t' << s.n_users << '\t' << s.n_resources << '\t' << s.n_tag_assignments << '\t'
      << format_avg(s.avg_interactions_per_user) << '\t' << format_avg(s.avg_interactions_per_resource) << '\t'
      << format_avg(s.avg_tags_per_resource) << '\n';
}

// Ingest reports bad records instead of failing on the first one, so it
// parses the files itself rather than going through read_dataset.
template <typename T, typename Parse>
std::vector<T> parse_reporting(const std::string& path, Parse&& parse, std::ostream& err, std::size_t& rejected) {
  if (path.empty()) return {};
  auto result = parse(io::read_file(path));
  for (const io::RecordError& e : result.errors) err << path << ':' << e.line << ": " << e.reason << '\n';
  rejected += result.errors.size();
  return std::move(result.records);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-resource recommender: ingestion, serving, evaluation", "learnrec"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate input files and write a dataset directory");
  DataFlags ingest_data;
  ingest->add_option("--interactions", ingest_data.interactions, "interactions.csv path");
  ingest->add_option("--resources", ingest_data.resources, "resources.jsonl path");
  ingest->add_option("--tags", ingest_data.tags, "tags.csv path");
  std::string ingest_out;
  ingest->add_option("--out", ingest_out, "Output dataset directory");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  DataFlags serve_data;
  serve_data.attach(*serve);
  std::string serve_host;
  int serve_port = -1;
  long long serve_refresh = -1;
  std::string serve_profiles;
  serve->add_option("--host", serve_host, "Bind address (default from LEARNREC_HOST or 0.0.0.0)");
  serve->add_option("--port", serve_port, "Port (default from LEARNREC_PORT or 8080)")->check(CLI::Range(0, 65535));
  serve->add_option("--refresh-ms", serve_refresh, "Write visibility bound in ms")->check(CLI::NonNegativeNumber);
  serve->add_option("--profiles", serve_profiles, "profiles.json to load");

  // recommend
  auto* rec = app.add_subcommand("recommend", "Print one recommendation list as TSV");
  DataFlags rec_data;
  rec_data.attach(*rec);
  std::string rec_algorithm = "popular", rec_user, rec_resource, rec_signal, rec_goal, rec_profile, rec_profiles;
  std::optional<std::size_t> rec_k;
  std::optional<double> rec_lambda;
  rec->add_option("--algorithm,-a", rec_algorithm, "uc1..uc7 or popular|cf|cf-tags|cbf|similar|contextual|goal");
  rec->add_option("--user,-u", rec_user, "Target user");
  rec->add_option("--resource,-r", rec_resource, "Seed or context resource");
  rec->add_option("--k", rec_k, "Neighborhood size / list length");
  rec->add_option("--signal", rec_signal, "interactions | tags");
  rec->add_option("--lambda", rec_lambda, "Goal blend weight in [0, 1]");
  rec->add_option("--goal", rec_goal, "harder | easier | topic:<term>");
  rec->add_option("--profile", rec_profile, "Profile id");
  rec->add_option("--profiles", rec_profiles, "profiles.json to load");

  // profile
  auto* prof = app.add_subcommand("profile", "Inspect or edit recommendation profiles");
  prof->require_subcommand(1);
  std::string prof_file, prof_out, prof_id, prof_json;
  prof->add_option("--profiles", prof_file, "profiles.json to start from");
  auto* prof_list = prof->add_subcommand("list", "Print all profiles as JSON");
  auto* prof_show = prof->add_subcommand("show", "Print one profile as JSON");
  prof_show->add_option("id", prof_id, "Profile id")->required();
  auto* prof_set = prof->add_subcommand("set", "Update or create a profile and write the registry");
  prof_set->add_option("id", prof_id, "Profile id")->required();
  prof_set->add_option("--json", prof_json, "Fields to change, as a JSON object")->required();
  prof_set->add_option("--out", prof_out, "Output file (default: the --profiles file)");

  // eval
  auto* ev = app.add_subcommand("eval", "Run the offline evaluation");
  DataFlags ev_data;
  ev_data.attach(*ev);
  std::string ev_algorithms = "uc1,uc2,uc3", ev_profiles, ev_out;
  double ev_fraction = 0.2;
  unsigned ev_threads = 0;
  bool ev_csv = false;
  std::optional<std::size_t> ev_k;
  ev->add_option("--algorithms", ev_algorithms, "Comma-separated algorithm ids")->capture_default_str();
  ev->add_option("--test-fraction", ev_fraction, "Per-user test fraction")->capture_default_str();
  ev->add_option("--k", ev_k, "Neighborhood size for CF profiles");
  ev->add_option("--threads", ev_threads, "Worker threads (0 = hardware)");
  ev->add_option("--profiles", ev_profiles, "profiles.json to load");
  ev->add_option("--out", ev_out, "Write the report as CSV");
  ev->add_flag("--csv", ev_csv, "Print CSV instead of the table");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth::SynthConfig syn_config;
  std::string syn_out;
  syn->add_option("--seed", syn_config.seed, "Random seed")->capture_default_str();
  syn->add_option("--users", syn_config.n_users, "Number of users")->capture_default_str();
  syn->add_option("--resources", syn_config.n_resources, "Number of resources")->capture_default_str();
  syn->add_option("--topics", syn_config.n_topics, "Number of latent topics")->capture_default_str();
  syn->add_option("--p", syn_config.p_topic_click, "Own-topic click probability")->capture_default_str();
  syn->add_option("--q", syn_config.q_topic_tag, "Own-topic tag probability")->capture_default_str();
  syn->add_option("--tagger-fraction", syn_config.tagger_fraction, "Fraction of users who tag")
      ->capture_default_str();
  syn->add_option("--activity-tail", syn_config.activity_tail, "Pareto shape of clicks per user")
      ->capture_default_str();
  syn->add_option("--out", syn_out, "Output dataset directory")->required();

  // stats
  auto* st = app.add_subcommand("stats", "Print dataset statistics as TSV");
  DataFlags st_data;
  st_data.attach(*st);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (ingest->parsed()) {
      if (!ingest_data.any()) throw ValidationError("ingest needs at least one of --interactions/--resources/--tags");
      std::size_t rejected = 0;
      Dataset dataset;
      dataset.interactions =
          parse_reporting<Interaction>(ingest_data.interactions, io::parse_interactions_csv, err, rejected);
      dataset.resources = parse_reporting<Resource>(ingest_data.resources, io::parse_resources_jsonl, err, rejected);
      dataset.tags = parse_reporting<TagAssignment>(ingest_data.tags, io::parse_tags_csv, err, rejected);
      store::Store store;
      rejected += store.ingest(dataset);
      const DatasetStats stats = store.refresh().stats();
      if (!ingest_out.empty()) io::write_snapshot(ingest_out, store.snapshot().export_dataset(), stats);
      const std::size_t accepted = dataset.interactions.size() + dataset.resources.size() + dataset.tags.size();
      out << "accepted\t" << accepted << "\nrejected\t" << rejected << '\n';
      print_stats(out, stats);
      return rejected == 0 ? kExitOk : kExitValidation;
    }

    if (serve->parsed()) {
      service::ServiceConfig config = service::ServiceConfig::from_env();
      if (!serve_host.empty()) config.host = serve_host;
      if (serve_port >= 0) config.port = serve_port;
      if (serve_refresh >= 0) config.refresh_bound = std::chrono::milliseconds(serve_refresh);
      if (!serve_profiles.empty()) config.profiles_file = serve_profiles;
      if (serve_data.any()) {
        const Dataset dataset = serve_data.load();
        return service::run_server(config, &dataset);
      }
      return service::run_server(config);
    }

    if (rec->parsed()) {
      const Dataset dataset = rec_data.load();
      store::Store store;
      store.ingest(dataset);
      store.refresh();
      profiles::ProfileRegistry registry;
      load_profiles(registry, rec_profiles);
      RecommendRequest request;
      request.algorithm = profiles::parse_algorithm(rec_algorithm);
      request.user = rec_user;
      request.resource = rec_resource;
      request.k = rec_k;
      if (!rec_signal.empty()) request.signal = engine::parse_signal(rec_signal);
      request.lambda = rec_lambda;
      if (!rec_goal.empty()) request.goal = rec_goal;
      if (!rec_profile.empty()) request.profile_id = rec_profile;
      const engine::RankedList list = recommend(store, registry, request);
      if (list.cold_start) err << "note: cold start for user '" << rec_user << "'\n";
      out << "rank\tresource_id\tscore\n";
      for (const engine::RankedEntry& e : list.entries) {
        out << e.rank << '\t' << e.resource_id << '\t' << format_score(e.score) << '\n';
      }
      return kExitOk;
    }

    if (prof->parsed()) {
      profiles::ProfileRegistry registry;
      load_profiles(registry, prof_file);
      if (prof_list->parsed()) {
        out << registry.to_json().dump(2) << '\n';
      } else if (prof_show->parsed()) {
        out << profiles::to_json(registry.get(prof_id)).dump(2) << '\n';
      } else if (prof_set->parsed()) {
        const nlohmann::json doc = nlohmann::json::parse(prof_json, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw ValidationError("--json must be a JSON object");
        profiles::RecommendationProfile base;
        base.profile_id = prof_id;
        try {
          base = registry.get(prof_id);
        } catch (const NotFoundError&) {
        }
        registry.set(profiles::profile_from_json(doc, base));
        const std::string target = prof_out.empty() ? prof_file : prof_out;
        if (target.empty()) throw ValidationError("profile set needs --out or --profiles");
        io::write_file(target, registry.to_json().dump(2) + "\n");
        out << profiles::to_json(registry.get(prof_id)).dump(2) << '\n';
      }
      return kExitOk;
    }

    if (ev->parsed()) {
      const Dataset dataset = ev_data.load();
      profiles::ProfileRegistry registry;
      load_profiles(registry, ev_profiles);
      if (ev_k) {
        for (const char* id : {"cf-default", "cf-tags"}) {
          auto p = registry.get(id);
          p.k_default = *ev_k;
          registry.set(p);
        }
      }
      eval::EvalConfig config;
      config.algorithms = parse_algorithm_list(ev_algorithms);
      config.test_fraction = ev_fraction;
      config.threads = ev_threads;
      const eval::EvaluationReport report = eval::run_evaluation(dataset, config, registry);
      const std::string csv = eval::to_csv(report);
      if (!ev_out.empty()) io::write_file(ev_out, csv);
      out << (ev_csv ? csv : eval::to_table(report));
      return kExitOk;
    }

    if (syn->parsed()) {
      const Dataset dataset = synth::generate_synthetic(syn_config);
      store::Store store;
      store.ingest(dataset);
      const DatasetStats stats = store.refresh().stats();
      io::write_snapshot(syn_out, dataset, stats);
      print_stats(out, stats);
      return kExitOk;
    }

    if (st->parsed()) {
      const Dataset dataset = st_data.load();
      store::Store store;
      store.ingest(dataset);
      print_stats(out, store.refresh().stats());
      return kExitOk;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace learnrec::cli
