#include "learnrec/service.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>

#include <httplib.h>

#include "learnrec/error.hpp"
#include "learnrec/io.hpp"
#include "learnrec/recommender.hpp"
#include "learnrec/text.hpp"

namespace learnrec::service {

using nlohmann::json;
using profiles::Algorithm;

namespace {

HttpResponse error_response(int status, std::string_view message) {
  return HttpResponse{status, json{{"error", std::string(message)}}};
}

std::optional<std::string> env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

long long parse_integer(std::string_view text, const char* what) {
  text = text::trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError(std::string(what) + " must be an integer, got '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, const char* what) {
  const std::string s(text::trim(text));
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ValidationError(std::string(what) + " must be a number, got '" + s + "'");
  }
  return value;
}

const std::string* param(const QueryParams& params, std::string_view key) {
  auto it = params.find(key);
  return it == params.end() ? nullptr : &it->second;
}

Algorithm algorithm_for_route(std::string_view use_case) {
  if (use_case == "popular") return Algorithm::popular;
  if (use_case == "cf") return Algorithm::cf_interactions;
  if (use_case == "cbf") return Algorithm::content_based;
  if (use_case == "similar") return Algorithm::similar_resources;
  if (use_case == "contextual") return Algorithm::contextual;
  if (use_case == "goal") return Algorithm::goal;
  throw NotFoundError("unknown use case '" + std::string(use_case) + "'");
}

json errors_json(const std::vector<io::RecordError>& errors) {
  json out = json::array();
  for (const io::RecordError& e : errors) out.push_back(json{{"line", e.line}, {"reason", e.reason}});
  return out;
}

// JSON array bodies: one object per record, "line" in errors is the 1-based
// array position.
template <typename T, typename Convert>
io::ParseResult<T> parse_json_records(const json& doc, Convert&& convert) {
  const json* records = &doc;
  if (doc.is_object()) {
    auto it = doc.find("records");
    if (it == doc.end()) throw std::invalid_argument("JSON body needs a 'records' array");
    records = &*it;
  }
  if (!records->is_array()) throw std::invalid_argument("JSON body must be an array of records");
  io::ParseResult<T> result;
  std::size_t line = 0;
  for (const json& record : *records) {
    ++line;
    try {
      if (!record.is_object()) throw ValidationError("record is not an object");
      result.records.push_back(convert(record));
    } catch (const ValidationError& e) {
      result.errors.push_back(io::RecordError{line, e.what()});
    } catch (const json::exception& e) {
      result.errors.push_back(io::RecordError{line, e.what()});
    }
  }
  return result;
}

std::string string_member(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::int64_t timestamp_member(const json& record) {
  auto it = record.find("timestamp_ms");
  if (it == record.end() || !it->is_number_integer()) throw ValidationError("field 'timestamp_ms' must be an integer");
  const auto ts = it->get<std::int64_t>();
  if (ts < 0) throw ValidationError("timestamp is negative");
  return ts;
}

Interaction interaction_from_json(const json& record) {
  Interaction i;
  i.user_id = string_member(record, "user_id");
  i.resource_id = string_member(record, "resource_id");
  i.timestamp_ms = timestamp_member(record);
  const std::string kind = string_member(record, "kind");
  i.kind = kind.empty() ? InteractionKind::click : parse_interaction_kind(kind);
  validate(i);
  return i;
}

TagAssignment tag_from_json(const json& record) {
  TagAssignment t;
  t.user_id = string_member(record, "user_id");
  t.resource_id = string_member(record, "resource_id");
  t.tag = normalize_tag(string_member(record, "tag"));
  t.timestamp_ms = timestamp_member(record);
  validate_id(t.user_id, "user_id");
  validate_id(t.resource_id, "resource_id");
  return t;
}

Resource resource_from_json(const json& record) {
  Resource r;
  r.resource_id = string_member(record, "resource_id");
  r.title = string_member(record, "title");
  r.description = string_member(record, "description");
  if (auto it = record.find("categories"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("field 'categories' is not an array");
    for (const json& c : *it) {
      if (!c.is_string()) throw ValidationError("category is not a string");
      r.categories.push_back(c.get<std::string>());
    }
  }
  validate(r);
  return r;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig config;
  if (auto host = env("LEARNREC_HOST")) config.host = *host;
  if (auto port = env("LEARNREC_PORT")) {
    const auto value = parse_integer(*port, "LEARNREC_PORT");
    if (value < 0 || value > 65535) throw ValidationError("LEARNREC_PORT out of range");
    config.port = static_cast<int>(value);
  }
  if (auto ms = env("LEARNREC_REFRESH_MS")) {
    const auto value = parse_integer(*ms, "LEARNREC_REFRESH_MS");
    if (value < 0) throw ValidationError("LEARNREC_REFRESH_MS must be >= 0");
    config.refresh_bound = std::chrono::milliseconds(value);
  }
  if (auto path = env("LEARNREC_PROFILES")) config.profiles_file = *path;
  return config;
}

json response_json(const engine::RankedList& list, double elapsed_ms) {
  json items = json::array();
  for (const engine::RankedEntry& e : list.entries) {
    items.push_back(json{{"resource_id", e.resource_id}, {"score", e.score}, {"rank", e.rank}});
  }
  return json{{"items", std::move(items)},
              {"algorithm_id", list.algorithm_id},
              {"profile_version", list.profile_version},
              {"cold_start", list.cold_start},
              {"neighborhood_size", list.neighborhood_size},
              {"elapsed_ms", elapsed_ms}};
}

json stats_json(const DatasetStats& s) {
  return json{{"n_interactions", s.n_interactions},
              {"n_users", s.n_users},
              {"n_resources", s.n_resources},
              {"n_tag_assignments", s.n_tag_assignments},
              {"avg_interactions_per_user", s.avg_interactions_per_user},
              {"avg_interactions_per_resource", s.avg_interactions_per_resource},
              {"avg_tags_per_resource", s.avg_tags_per_resource}};
}

json report_json(const eval::EvaluationReport& report) {
  json rows = json::array();
  for (const eval::MetricRow& r : report.rows) {
    rows.push_back(json{{"algorithm_id", std::string(profiles::to_string(r.algorithm))},
                        {"name", std::string(profiles::display_name(r.algorithm))},
                        {"recall", r.recall},
                        {"precision", r.precision},
                        {"f1", r.f1},
                        {"mrr", r.mrr},
                        {"map", r.map},
                        {"ndcg", r.ndcg},
                        {"coverage", r.coverage},
                        {"n_test_users", r.n_test_users}});
  }
  const eval::MetricCutoffs& c = report.cutoffs;
  return json{{"rows", std::move(rows)},
              {"cutoffs",
               {{"recall", c.recall}, {"precision", c.precision}, {"f1", c.f1}, {"mrr", c.mrr}, {"map", c.map},
                {"ndcg", c.ndcg}}},
              {"csv", eval::to_csv(report)},
              {"table", eval::to_table(report)}};
}

// ---------------------------------------------------------------------------
// Service

struct Service::EvalJob {
  std::string id;
  std::vector<Algorithm> algorithms;
  mutable std::mutex mu;
  mutable std::condition_variable done_cv;
  std::string status = "running";
  std::optional<eval::EvaluationReport> report;
  std::string error;
  std::thread worker;

  json status_json() const {
    std::lock_guard lock(mu);
    json out{{"run_id", id}, {"status", status}};
    if (report) out["report"] = report_json(*report);
    if (!error.empty()) out["error"] = error;
    return out;
  }
};

Service::Service(store::Store& store, profiles::ProfileRegistry& registry) : store_(store), registry_(registry) {}

Service::~Service() {
  std::lock_guard lock(jobs_mu_);
  for (auto& [id, job] : jobs_) {
    if (job->worker.joinable()) job->worker.join();
  }
}

HttpResponse Service::handle_ingest(std::string_view kind, std::string_view content_type, std::string_view body) {
  const bool as_json = content_type.find("json") != std::string_view::npos &&
                       content_type.find("jsonl") == std::string_view::npos &&
                       content_type.find("x-ndjson") == std::string_view::npos;
  Dataset batch;
  std::vector<io::RecordError> errors;
  try {
    json doc;
    if (as_json) {
      doc = json::parse(body, nullptr, false);
      if (doc.is_discarded()) return error_response(400, "body is not valid JSON");
    }
    if (kind == "interactions") {
      auto parsed = as_json ? parse_json_records<Interaction>(doc, interaction_from_json)
                            : io::parse_interactions_csv(body);
      batch.interactions = std::move(parsed.records);
      errors = std::move(parsed.errors);
    } else if (kind == "resources") {
      auto parsed = as_json ? parse_json_records<Resource>(doc, resource_from_json) : io::parse_resources_jsonl(body);
      batch.resources = std::move(parsed.records);
      errors = std::move(parsed.errors);
    } else if (kind == "tags") {
      auto parsed = as_json ? parse_json_records<TagAssignment>(doc, tag_from_json) : io::parse_tags_csv(body);
      batch.tags = std::move(parsed.records);
      errors = std::move(parsed.errors);
    } else {
      return error_response(404, "unknown data kind '" + std::string(kind) + "'");
    }
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  } catch (const std::invalid_argument& e) {
    return error_response(400, e.what());
  }

  const std::size_t parsed = batch.interactions.size() + batch.resources.size() + batch.tags.size();
  const std::size_t rejected_by_store = store_.ingest(batch);
  return HttpResponse{200, json{{"accepted", parsed - rejected_by_store},
                                {"rejected", errors.size() + rejected_by_store},
                                {"errors", errors_json(errors)},
                                {"store_version", store_.write_version()}}};
}

HttpResponse Service::handle_recommend(std::string_view use_case, const QueryParams& params) {
  const auto started = std::chrono::steady_clock::now();
  try {
    RecommendRequest request;
    request.algorithm = algorithm_for_route(use_case);
    if (const auto* user = param(params, "user")) request.user = *user;
    if (const auto* resource = param(params, "resource")) request.resource = *resource;
    if (const auto* k = param(params, "k")) {
      const auto value = parse_integer(*k, "k");
      if (value < 1) throw ValidationError("k must be a positive integer");
      request.k = static_cast<std::size_t>(value);
    }
    if (const auto* signal = param(params, "signal")) request.signal = engine::parse_signal(*signal);
    if (const auto* lambda = param(params, "lambda")) {
      const double value = parse_real(*lambda, "lambda");
      if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
      request.lambda = value;
    }
    if (const auto* goal = param(params, "goal")) {
      engine::GoalSpec::parse(*goal);
      request.goal = *goal;
    }
    if (const auto* profile = param(params, "profile")) request.profile_id = *profile;

    const engine::RankedList list = recommend(store_, registry_, request);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return HttpResponse{200, response_json(list, elapsed)};
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  }
}

HttpResponse Service::handle_list_profiles() const { return HttpResponse{200, registry_.to_json()}; }

HttpResponse Service::handle_get_profile(std::string_view profile_id) const {
  try {
    return HttpResponse{200, profiles::to_json(registry_.get(profile_id))};
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  }
}

HttpResponse Service::handle_put_profile(std::string_view profile_id, std::string_view body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return error_response(400, "body must be a JSON object");
  try {
    if (auto it = doc.find("profile_id"); it != doc.end() && (!it->is_string() || it->get<std::string>() != profile_id)) {
      throw ValidationError("profile_id in body does not match the path");
    }
    profiles::RecommendationProfile base;
    try {
      base = registry_.get(profile_id);
    } catch (const NotFoundError&) {
      base.profile_id = std::string(profile_id);
    }
    profiles::RecommendationProfile updated = profiles::profile_from_json(doc, base);
    updated.version = registry_.set(updated);
    return HttpResponse{200, profiles::to_json(updated)};
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  }
}

HttpResponse Service::handle_eval_run(std::string_view body) {
  const json doc = body.empty() ? json::object() : json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return error_response(400, "body must be a JSON object");

  eval::EvalConfig config;
  Dataset dataset;
  try {
    if (auto it = doc.find("algorithms"); it != doc.end()) {
      if (!it->is_array()) throw ValidationError("'algorithms' must be an array");
      config.algorithms.clear();
      for (const json& a : *it) {
        if (!a.is_string()) throw ValidationError("algorithm ids must be strings");
        config.algorithms.push_back(profiles::parse_algorithm(a.get<std::string>()));
      }
      if (config.algorithms.empty()) throw ValidationError("'algorithms' is empty");
    }
    if (auto it = doc.find("test_fraction"); it != doc.end()) {
      if (!it->is_number()) throw ValidationError("'test_fraction' must be a number");
      config.test_fraction = it->get<double>();
      if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
        throw ValidationError("test fraction must lie strictly between 0 and 1");
      }
    }
    if (auto it = doc.find("threads"); it != doc.end()) {
      if (!it->is_number_unsigned()) throw ValidationError("'threads' must be a non-negative integer");
      config.threads = it->get<unsigned>();
    }
    if (auto it = doc.find("dataset"); it != doc.end() && !it->is_null()) {
      if (!it->is_object()) throw ValidationError("'dataset' must be an object");
      const auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
        auto p = it->find(key);
        if (p == it->end() || p->is_null()) return std::nullopt;
        if (!p->is_string()) throw ValidationError(std::string("dataset.") + key + " must be a string");
        return std::filesystem::path(p->get<std::string>());
      };
      if (auto dir = path_of("dir")) {
        dataset = io::read_snapshot(*dir);
      } else {
        dataset = io::read_dataset(io::DatasetPaths{path_of("interactions"), path_of("resources"), path_of("tags")});
      }
    } else {
      dataset = store_.refresh().export_dataset();
    }
    if (dataset.interactions.empty()) throw ValidationError("dataset has no interactions");
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  } catch (const IoError& e) {
    return error_response(422, e.what());
  }

  auto job = std::make_shared<EvalJob>();
  job->algorithms = config.algorithms;
  {
    std::lock_guard lock(jobs_mu_);
    job->id = std::to_string(next_job_++);
    jobs_[job->id] = job;
  }
  const profiles::ProfileRegistry& registry = registry_;
  job->worker = std::thread([job, config, dataset = std::move(dataset), &registry] {
    std::optional<eval::EvaluationReport> report;
    std::string error;
    try {
      report = eval::run_evaluation(dataset, config, registry);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(job->mu);
    job->report = std::move(report);
    job->error = std::move(error);
    job->status = job->error.empty() ? "done" : "failed";
    job->done_cv.notify_all();
  });
  return HttpResponse{202, json{{"run_id", job->id}, {"status", "running"}}};
}

HttpResponse Service::handle_eval_status(std::string_view run_id) const {
  std::shared_ptr<EvalJob> job;
  {
    std::lock_guard lock(jobs_mu_);
    auto it = jobs_.find(run_id);
    if (it == jobs_.end()) return error_response(404, "unknown evaluation run '" + std::string(run_id) + "'");
    job = it->second;
  }
  return HttpResponse{200, job->status_json()};
}

std::optional<json> Service::wait_for_run(std::string_view run_id, std::chrono::milliseconds timeout) const {
  std::shared_ptr<EvalJob> job;
  {
    std::lock_guard lock(jobs_mu_);
    auto it = jobs_.find(run_id);
    if (it == jobs_.end()) return std::nullopt;
    job = it->second;
  }
  {
    std::unique_lock lock(job->mu);
    if (!job->done_cv.wait_for(lock, timeout, [&] { return job->status != "running"; })) return std::nullopt;
  }
  return job->status_json();
}

HttpResponse Service::handle_stats() const {
  const store::StoreSnapshot snap = store_.snapshot();
  json body = stats_json(snap.stats());
  body["store_version"] = snap.version();
  return HttpResponse{200, std::move(body)};
}

HttpResponse Service::handle_health() const {
  return HttpResponse{200, json{{"status", "ok"}, {"store_version", store_.snapshot().version()}}};
}

// ---------------------------------------------------------------------------
// HttpServer

namespace {

void reply(httplib::Response& res, const HttpResponse& out) {
  res.status = out.status;
  res.set_content(out.body.dump(), "application/json");
}

QueryParams query_params(const httplib::Request& req) {
  QueryParams out;
  for (const auto& [key, value] : req.params) out.emplace(key, value);
  return out;
}

}  // namespace

HttpServer::HttpServer(Service& service, ServiceConfig config)
    : service_(service), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  httplib::Server& srv = *server_;
  const std::size_t workers = config_.worker_threads;
  srv.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

  srv.Post(R"(/data/(interactions|resources|tags))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_ingest(req.matches[1].str(), req.get_header_value("Content-Type"), req.body));
  });
  srv.Get(R"(/rec/([A-Za-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_recommend(req.matches[1].str(), query_params(req)));
  });
  srv.Get("/admin/profiles", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.handle_list_profiles());
  });
  srv.Get(R"(/admin/profiles/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_get_profile(req.matches[1].str()));
  });
  srv.Put(R"(/admin/profiles/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_put_profile(req.matches[1].str(), req.body));
  });
  srv.Post("/eval/run", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_eval_run(req.body));
  });
  srv.Get(R"(/eval/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_eval_status(req.matches[1].str()));
  });
  srv.Get("/stats", [this](const httplib::Request&, httplib::Response& res) { reply(res, service_.handle_stats()); });
  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) { reply(res, service_.handle_health()); });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    HttpResponse out{500, json{{"error", "internal error"}}};
    try {
      std::rethrow_exception(ep);
    } catch (const ValidationError& e) {
      out = HttpResponse{422, json{{"error", e.what()}}};
    } catch (const NotFoundError& e) {
      out = HttpResponse{404, json{{"error", e.what()}}};
    } catch (const std::exception& e) {
      out.body["error"] = e.what();
    } catch (...) {
    }
    reply(res, out);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (port_ >= 0) return port_;
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  return port_;
}

void HttpServer::refresher_loop() {
  const auto period = std::max(std::chrono::milliseconds(5), config_.refresh_bound / 4);
  std::unique_lock lock(stop_mu_);
  while (!stop_cv_.wait_for(lock, period, [this] { return stopping_; })) {
    lock.unlock();
    service_.store().maybe_refresh();
    lock.lock();
  }
}

void HttpServer::start() {
  bind();
  refresher_ = std::thread([this] { refresher_loop(); });
  listen_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::listen() {
  bind();
  refresher_ = std::thread([this] { refresher_loop(); });
  server_->listen_after_bind();
}

void HttpServer::stop() {
  {
    std::lock_guard lock(stop_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  stop_cv_.notify_all();
  if (server_) server_->stop();
  if (listen_thread_.joinable()) listen_thread_.join();
  if (refresher_.joinable()) refresher_.join();
}

int run_server(const ServiceConfig& config, const Dataset* dataset) {
  store::Store store(store::StoreOptions{config.refresh_bound});
  profiles::ProfileRegistry registry;
  if (config.profiles_file) registry.load_file(*config.profiles_file);
  if (dataset != nullptr) {
    store.ingest(*dataset);
    store.refresh();
  }
  Service service(store, registry);
  HttpServer server(service, config);
  const int port = server.bind();
  std::cerr << "learnrec: listening on " << config.host << ":" << port << " (refresh bound "
            << config.refresh_bound.count() << " ms)\n";
  server.listen();
  return 0;
}

}  // namespace learnrec::service
