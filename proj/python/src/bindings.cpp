#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "learnrec/error.hpp"
#include "learnrec/evaluator.hpp"
#include "learnrec/io.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/recommender.hpp"
#include "learnrec/store.hpp"
#include "learnrec/synth.hpp"

namespace py = pybind11;
using namespace learnrec;

namespace {

py::object from_json(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json to_json(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::dict stats_dict(const DatasetStats& s) {
  py::dict d;
  d["n_interactions"] = s.n_interactions;
  d["n_users"] = s.n_users;
  d["n_resources"] = s.n_resources;
  d["n_tag_assignments"] = s.n_tag_assignments;
  d["avg_interactions_per_user"] = s.avg_interactions_per_user;
  d["avg_interactions_per_resource"] = s.avg_interactions_per_resource;
  d["avg_tags_per_resource"] = s.avg_tags_per_resource;
  return d;
}

py::dict list_dict(const engine::RankedList& list) {
  py::list items;
  for (const auto& e : list.entries) items.append(py::make_tuple(e.resource_id, e.score));
  py::dict d;
  d["items"] = items;
  d["algorithm_id"] = list.algorithm_id;
  d["profile_version"] = list.profile_version;
  d["cold_start"] = list.cold_start;
  d["neighborhood_size"] = list.neighborhood_size;
  return d;
}

Dataset load_dataset(const std::optional<std::filesystem::path>& data_dir,
                     const std::optional<std::filesystem::path>& interactions,
                     const std::optional<std::filesystem::path>& resources,
                     const std::optional<std::filesystem::path>& tags) {
  Dataset out;
  if (data_dir) out = io::read_snapshot(*data_dir);
  Dataset extra = io::read_dataset(io::DatasetPaths{interactions, resources, tags});
  out.interactions.insert(out.interactions.end(), extra.interactions.begin(), extra.interactions.end());
  out.resources.insert(out.resources.end(), extra.resources.begin(), extra.resources.end());
  out.tags.insert(out.tags.end(), extra.tags.begin(), extra.tags.end());
  return out;
}

// Store plus its profile registry; the unit Python code works with.
class Recommender {
 public:
  explicit Recommender(long long refresh_ms) : store_(store::StoreOptions{std::chrono::milliseconds(refresh_ms)}) {}

  store::Store& store() { return store_; }
  profiles::ProfileRegistry& registry() { return registry_; }

 private:
  store::Store store_;
  profiles::ProfileRegistry registry_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "learnrec core bindings";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_KeyError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<Recommender>(m, "Recommender")
      .def(py::init<long long>(), py::arg("refresh_ms") = 1000)
      .def(
          "add_interaction",
          [](Recommender& r, std::string user, std::string resource, std::int64_t timestamp_ms) {
            return r.store().add_interaction(Interaction{std::move(user), std::move(resource), timestamp_ms});
          },
          py::arg("user_id"), py::arg("resource_id"), py::arg("timestamp_ms"))
      .def(
          "add_resource",
          [](Recommender& r, std::string id, std::string title, std::string description,
             std::vector<std::string> categories) {
            return r.store().add_resource(
                Resource{std::move(id), std::move(title), std::move(description), std::move(categories)});
          },
          py::arg("resource_id"), py::arg("title") = "", py::arg("description") = "",
          py::arg("categories") = std::vector<std::string>{})
      .def(
          "add_tag",
          [](Recommender& r, std::string user, std::string resource, std::string tag, std::int64_t timestamp_ms) {
            return r.store().add_tag_assignment(
                TagAssignment{std::move(user), std::move(resource), std::move(tag), timestamp_ms});
          },
          py::arg("user_id"), py::arg("resource_id"), py::arg("tag"), py::arg("timestamp_ms"))
      .def(
          "load",
          [](Recommender& r, std::optional<std::filesystem::path> data_dir,
             std::optional<std::filesystem::path> interactions, std::optional<std::filesystem::path> resources,
             std::optional<std::filesystem::path> tags) {
            const Dataset dataset = load_dataset(data_dir, interactions, resources, tags);
            py::gil_scoped_release release;
            return r.store().ingest(dataset);
          },
          py::arg("data_dir") = py::none(), py::arg("interactions") = py::none(), py::arg("resources") = py::none(),
          py::arg("tags") = py::none(), "Ingests dataset files; returns the number of rejected records.")
      .def("refresh", [](Recommender& r) { return r.store().refresh().version(); })
      .def_property_readonly("version", [](Recommender& r) { return r.store().snapshot().version(); })
      .def("stats", [](Recommender& r) { return stats_dict(r.store().compute_stats()); })
      .def("history",
           [](Recommender& r, std::string_view user) {
             py::list out;
             for (const auto& i : r.store().get_user_history(user)) {
               out.append(py::make_tuple(i.resource_id, i.timestamp_ms));
             }
             return out;
           })
      .def(
          "recommend",
          [](Recommender& r, std::string algorithm, std::string user, std::string resource,
             std::optional<std::size_t> k, std::optional<std::string> signal, std::optional<double> lambda,
             std::optional<std::string> goal, std::optional<std::string> profile) {
            RecommendRequest request;
            request.algorithm = profiles::parse_algorithm(algorithm);
            request.user = std::move(user);
            request.resource = std::move(resource);
            request.k = k;
            if (signal) request.signal = engine::parse_signal(*signal);
            request.lambda = lambda;
            request.goal = std::move(goal);
            request.profile_id = std::move(profile);
            engine::RankedList list;
            {
              py::gil_scoped_release release;
              list = recommend(r.store(), r.registry(), request);
            }
            return list_dict(list);
          },
          py::arg("algorithm"), py::arg("user") = "", py::arg("resource") = "", py::arg("k") = py::none(),
          py::arg("signal") = py::none(), py::arg("lambda_") = py::none(), py::arg("goal") = py::none(),
          py::arg("profile") = py::none())
      .def("get_profile",
           [](Recommender& r, std::string_view id) { return from_json(profiles::to_json(r.registry().get(id))); })
      .def("list_profiles", [](Recommender& r) { return from_json(r.registry().to_json()); })
      .def(
          "set_profile",
          [](Recommender& r, std::string id, py::dict fields) {
            profiles::RecommendationProfile base;
            base.profile_id = id;
            try {
              base = r.registry().get(id);
            } catch (const NotFoundError&) {
            }
            return r.registry().set(profiles::profile_from_json(to_json(fields), base));
          },
          py::arg("profile_id"), py::arg("fields"), "Merges fields into the profile; returns the new version.");

  m.def(
      "evaluate",
      [](std::optional<std::filesystem::path> data_dir, std::optional<std::filesystem::path> interactions,
         std::optional<std::filesystem::path> resources, std::optional<std::filesystem::path> tags,
         std::vector<std::string> algorithms, double test_fraction, unsigned threads) {
        const Dataset dataset = load_dataset(data_dir, interactions, resources, tags);
        eval::EvalConfig config;
        config.algorithms.clear();
        for (const auto& a : algorithms) config.algorithms.push_back(profiles::parse_algorithm(a));
        config.test_fraction = test_fraction;
        config.threads = threads;
        profiles::ProfileRegistry registry;
        eval::EvaluationReport report;
        {
          py::gil_scoped_release release;
          report = eval::run_evaluation(dataset, config, registry);
        }
        py::list rows;
        for (const auto& row : report.rows) {
          py::dict d;
          d["algorithm_id"] = std::string(profiles::to_string(row.algorithm));
          d["name"] = std::string(profiles::display_name(row.algorithm));
          d["recall"] = row.recall;
          d["precision"] = row.precision;
          d["f1"] = row.f1;
          d["mrr"] = row.mrr;
          d["map"] = row.map;
          d["ndcg"] = row.ndcg;
          d["coverage"] = row.coverage;
          d["n_test_users"] = row.n_test_users;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["csv"] = eval::to_csv(report);
        return out;
      },
      py::arg("data_dir") = py::none(), py::arg("interactions") = py::none(), py::arg("resources") = py::none(),
      py::arg("tags") = py::none(), py::arg("algorithms") = std::vector<std::string>{"uc1", "uc2", "uc3"},
      py::arg("test_fraction") = 0.2, py::arg("threads") = 0u);

  m.def(
      "synthesize",
      [](const std::filesystem::path& out_dir, std::uint64_t seed, std::size_t users, std::size_t resources,
         std::size_t topics, double p, double q, double activity_tail) {
        synth::SynthConfig config;
        config.seed = seed;
        config.n_users = users;
        config.n_resources = resources;
        config.n_topics = topics;
        config.p_topic_click = p;
        config.q_topic_tag = q;
        config.activity_tail = activity_tail;
        const Dataset dataset = synth::generate_synthetic(config);
        store::Store store;
        store.ingest(dataset);
        const DatasetStats stats = store.refresh().stats();
        io::write_snapshot(out_dir, dataset, stats);
        return stats_dict(stats);
      },
      py::arg("out_dir"), py::arg("seed") = 1, py::arg("users") = 2000, py::arg("resources") = 300,
      py::arg("topics") = 10, py::arg("p") = 0.6, py::arg("q") = 0.95, py::arg("activity_tail") = 1.2,
      "Writes a synthetic dataset directory; returns its stats.");

  const auto metric = [&m](const char* name, double (*fn)(std::span<const std::string>, const eval::RelevantSet&,
                                                          std::size_t)) {
    m.def(
        name,
        [fn](const std::vector<std::string>& recommended, const std::set<std::string>& relevant, std::size_t k) {
          return fn(recommended, relevant, k);
        },
        py::arg("recommended"), py::arg("relevant"), py::arg("k"));
  };
  metric("recall_at_k", eval::recall_at_k);
  metric("precision_at_k", eval::precision_at_k);
  metric("f1_at_k", eval::f1_at_k);
  metric("mrr_at_k", eval::mrr_at_k);
  metric("map_at_k", eval::map_at_k);
  metric("ndcg_at_k", eval::ndcg_at_k);
}
