#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "learnrec/engine.hpp"
#include "learnrec/evaluator.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/store.hpp"

namespace httplib {
class Server;
}

namespace learnrec::service {

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 binds an ephemeral port
  std::chrono::milliseconds refresh_bound{1000};
  std::optional<std::filesystem::path> profiles_file;
  std::size_t worker_threads = 64;

  /// LEARNREC_HOST, LEARNREC_PORT, LEARNREC_REFRESH_MS, LEARNREC_PROFILES
  /// override the defaults. Throws ValidationError on unparsable values.
  static ServiceConfig from_env();
};

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

/// JSON form of a recommendation response.
nlohmann::json response_json(const engine::RankedList& list, double elapsed_ms);
nlohmann::json stats_json(const DatasetStats& stats);
nlohmann::json report_json(const eval::EvaluationReport& report);

/// Transport-independent request handlers. Each maps domain errors onto
/// status codes: ValidationError -> 422, NotFoundError -> 404, malformed
/// request bodies -> 400.
class Service {
 public:
  Service(store::Store& store, profiles::ProfileRegistry& registry);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// kind: interactions | resources | tags. JSON bodies (content type
  /// application/json) carry an array of record objects; anything else is
  /// parsed as the matching file format.
  HttpResponse handle_ingest(std::string_view kind, std::string_view content_type, std::string_view body);

  /// use_case: popular | cf | cbf | similar | contextual | goal.
  HttpResponse handle_recommend(std::string_view use_case, const QueryParams& params);

  HttpResponse handle_list_profiles() const;
  HttpResponse handle_get_profile(std::string_view profile_id) const;
  HttpResponse handle_put_profile(std::string_view profile_id, std::string_view body);

  /// Starts an evaluation in the background; responds 202 with a run id.
  HttpResponse handle_eval_run(std::string_view body);
  HttpResponse handle_eval_status(std::string_view run_id) const;

  HttpResponse handle_stats() const;
  HttpResponse handle_health() const;

  /// Blocks until the run finishes or the timeout expires; returns its status body.
  std::optional<nlohmann::json> wait_for_run(std::string_view run_id, std::chrono::milliseconds timeout) const;

  store::Store& store() { return store_; }
  profiles::ProfileRegistry& registry() { return registry_; }

 private:
  struct EvalJob;

  store::Store& store_;
  profiles::ProfileRegistry& registry_;
  mutable std::mutex jobs_mu_;
  std::map<std::string, std::shared_ptr<EvalJob>, std::less<>> jobs_;
  std::uint64_t next_job_ = 1;
};

/// Binds a Service to cpp-httplib and keeps the store's published snapshot
/// fresh in the background.
class HttpServer {
 public:
  HttpServer(Service& service, ServiceConfig config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port. Throws IoError.
  int bind();
  /// Serves on a background thread (binding first if needed).
  void start();
  /// Serves on the calling thread until stop().
  void listen();
  void stop();
  int port() const { return port_; }

 private:
  void refresher_loop();

  Service& service_;
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
  std::thread listen_thread_;
  std::thread refresher_;
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
};

/// Loads profiles, optionally pre-ingests `dataset`, and serves until the
/// process is terminated.
int run_server(const ServiceConfig& config, const Dataset* dataset = nullptr);

}  // namespace learnrec::service
