#include "learnrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>
#include <unordered_map>

#include "learnrec/error.hpp"
#include "learnrec/recommender.hpp"
#include "learnrec/store.hpp"

namespace learnrec::eval {

using profiles::Algorithm;

// ---------------------------------------------------------------------------
// Split

SplitResult chronological_split(std::span<const Interaction> interactions, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie strictly between 0 and 1");
  }
  struct Latest {
    std::int64_t timestamp_ms;
    std::size_t position;
  };
  // user -> resource -> latest occurrence
  std::map<std::string, std::unordered_map<std::string, Latest>> latest;
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const Interaction& it = interactions[i];
    auto [entry, inserted] = latest[it.user_id].try_emplace(it.resource_id, Latest{it.timestamp_ms, i});
    if (!inserted && it.timestamp_ms >= entry->second.timestamp_ms) entry->second = Latest{it.timestamp_ms, i};
  }

  SplitResult split;
  for (const auto& [user, pairs] : latest) {
    std::vector<std::pair<std::string, Latest>> ordered(pairs.begin(), pairs.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second.timestamp_ms != b.second.timestamp_ms) return a.second.timestamp_ms < b.second.timestamp_ms;
      return a.second.position < b.second.position;
    });
    const std::size_t m = ordered.size();
    // Small epsilon so that e.g. 0.2 * 10 lands on 2, not 3.
    auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(m) - 1e-9));
    n_test = std::clamp<std::size_t>(n_test, 1, m);
    RelevantSet& test = split.test[user];
    for (std::size_t i = m - n_test; i < m; ++i) test.insert(ordered[i].first);
    split.test_start_ms[user] = ordered[m - n_test].second.timestamp_ms;
    split.test_users.push_back(user);
  }
  for (const Interaction& it : interactions) {
    if (!split.test.at(it.user_id).contains(it.resource_id)) split.train.push_back(it);
  }
  return split;
}

Dataset training_dataset(const Dataset& full, const SplitResult& split) {
  Dataset out;
  out.interactions = split.train;
  out.resources = full.resources;
  for (const TagAssignment& t : full.tags) {
    auto test = split.test.find(t.user_id);
    if (test != split.test.end()) {
      if (test->second.contains(t.resource_id)) continue;
      if (t.timestamp_ms >= split.test_start_ms.at(t.user_id)) continue;
    }
    out.tags.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void require_k(std::size_t k) {
  if (k == 0) throw ValidationError("k must be a positive integer");
}

std::size_t hits_at(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  std::size_t hits = 0;
  const std::size_t depth = std::min(k, recommended.size());
  for (std::size_t i = 0; i < depth; ++i) hits += relevant.contains(recommended[i]) ? 1 : 0;
  return hits;
}

}  // namespace

double recall_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits_at(recommended, relevant, k)) / static_cast<double>(relevant.size());
}

double precision_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  return static_cast<double>(hits_at(recommended, relevant, k)) / static_cast<double>(k);
}

double f1_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  const double p = precision_at_k(recommended, relevant, k);
  const double r = recall_at_k(recommended, relevant, k);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double mrr_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  const std::size_t depth = std::min(k, recommended.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(recommended[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double map_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  const std::size_t depth = std::min(k, recommended.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (!relevant.contains(recommended[i])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

double ndcg_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  const std::size_t depth = std::min(k, recommended.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(recommended[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(relevant.size(), k);
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

double coverage(std::span<const engine::RankedList> per_user_lists) {
  if (per_user_lists.empty()) throw ValidationError("coverage needs at least one test user");
  const auto covered = std::count_if(per_user_lists.begin(), per_user_lists.end(),
                                     [](const engine::RankedList& l) { return !l.empty(); });
  return static_cast<double>(covered) / static_cast<double>(per_user_lists.size());
}

std::size_t MetricCutoffs::list_length() const { return std::max({recall, precision, f1, mrr, map, ndcg}); }

const MetricRow& EvaluationReport::row(Algorithm algorithm) const {
  for (const MetricRow& r : rows) {
    if (r.algorithm == algorithm) return r;
  }
  throw NotFoundError("no row for " + std::string(profiles::to_string(algorithm)));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct UserScores {
  double recall = 0, precision = 0, f1 = 0, mrr = 0, map = 0, ndcg = 0;
  bool covered = false;
};

// Most recent training resource of a user, used as the seed of the
// resource-anchored use cases.
std::string latest_training_resource(const store::StoreSnapshot& snap, const std::string& user) {
  const auto history = snap.user_history(user);
  return history.empty() ? std::string() : history.back().resource_id;
}

engine::RankedList run_for_user(const engine::Engine& engine, const profiles::RecommendationProfile& profile,
                                Algorithm algorithm, const std::string& user, std::size_t k) {
  RecommendRequest request;
  request.algorithm = algorithm;
  request.user = user;
  request.k = k;
  if (algorithm == Algorithm::similar_resources || algorithm == Algorithm::contextual) {
    request.resource = latest_training_resource(engine.snapshot(), user);
    if (request.resource.empty()) {
      engine::RankedList empty;
      empty.cold_start = true;
      return empty;
    }
  }
  return recommend(engine, profile, request);
}

}  // namespace

EvaluationReport evaluate(std::span<const Algorithm> algorithms, const SplitResult& split, const Dataset& training,
                          const profiles::ProfileRegistry& registry, const MetricCutoffs& cutoffs, unsigned threads) {
  if (split.test_users.empty()) throw ValidationError("split has no test users");
  for (const std::size_t k : {cutoffs.recall, cutoffs.precision, cutoffs.f1, cutoffs.mrr, cutoffs.map, cutoffs.ndcg}) {
    require_k(k);
  }
  std::vector<Algorithm> ordered(algorithms.begin(), algorithms.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  store::Store store;
  store.ingest(training);
  const engine::Engine engine(store.refresh());
  const std::size_t list_length = cutoffs.list_length();
  const std::size_t n_users = split.test_users.size();
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_users));

  EvaluationReport report;
  report.cutoffs = cutoffs;
  for (const Algorithm algorithm : ordered) {
    const auto profile = registry.get_shared(std::string(profiles::default_profile_id(algorithm)));
    std::vector<UserScores> per_user(n_users);
    const auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::string& user = split.test_users[i];
        const RelevantSet& relevant = split.test.at(user);
        const engine::RankedList list = run_for_user(engine, *profile, algorithm, user, list_length);
        const std::vector<std::string> ids = list.ids();
        UserScores& s = per_user[i];
        s.covered = !list.empty();
        s.recall = recall_at_k(ids, relevant, cutoffs.recall);
        s.precision = precision_at_k(ids, relevant, cutoffs.precision);
        s.f1 = f1_at_k(ids, relevant, cutoffs.f1);
        s.mrr = mrr_at_k(ids, relevant, cutoffs.mrr);
        s.map = map_at_k(ids, relevant, cutoffs.map);
        s.ndcg = ndcg_at_k(ids, relevant, cutoffs.ndcg);
      }
    };
    if (threads <= 1) {
      work(0, n_users);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n_users + threads - 1) / threads;
      for (std::size_t begin = 0; begin < n_users; begin += chunk) {
        pool.emplace_back(work, begin, std::min(n_users, begin + chunk));
      }
    }

    // Summation in user order keeps the report independent of scheduling.
    MetricRow row;
    row.algorithm = algorithm;
    row.n_test_users = n_users;
    for (const UserScores& s : per_user) {
      row.recall += s.recall;
      row.precision += s.precision;
      row.f1 += s.f1;
      row.mrr += s.mrr;
      row.map += s.map;
      row.ndcg += s.ndcg;
      row.covered_users += s.covered ? 1 : 0;
    }
    const double n = static_cast<double>(n_users);
    row.recall /= n;
    row.precision /= n;
    row.f1 /= n;
    row.mrr /= n;
    row.map /= n;
    row.ndcg /= n;
    row.coverage = static_cast<double>(row.covered_users) / n;
    report.rows.push_back(row);
  }
  return report;
}

EvaluationReport run_evaluation(const Dataset& dataset, const EvalConfig& config,
                                const profiles::ProfileRegistry& registry) {
  if (config.algorithms.empty()) throw ValidationError("no algorithms to evaluate");
  const SplitResult split = chronological_split(dataset.interactions, config.test_fraction);
  const Dataset training = training_dataset(dataset, split);
  return evaluate(config.algorithms, split, training, registry, config.cutoffs, config.threads);
}

// ---------------------------------------------------------------------------
// Formatting

namespace {

std::string fixed4(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

std::vector<std::string> header(const MetricCutoffs& c) {
  return {"algorithm",
          "name",
          "R@" + std::to_string(c.recall),
          "P@" + std::to_string(c.precision),
          "F1@" + std::to_string(c.f1),
          "MRR@" + std::to_string(c.mrr),
          "MAP@" + std::to_string(c.map),
          "nDCG@" + std::to_string(c.ndcg),
          "C",
          "n_test_users"};
}

std::vector<std::string> cells(const MetricRow& r) {
  return {std::string(profiles::to_string(r.algorithm)),
          std::string(profiles::display_name(r.algorithm)),
          fixed4(r.recall),
          fixed4(r.precision),
          fixed4(r.f1),
          fixed4(r.mrr),
          fixed4(r.map),
          fixed4(r.ndcg),
          fixed4(r.coverage),
          std::to_string(r.n_test_users)};
}

}  // namespace

std::string to_csv(const EvaluationReport& report) {
  std::string out;
  const auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out.push_back(',');
      out += fields[i];
    }
    out.push_back('\n');
  };
  emit(header(report.cutoffs));
  for (const MetricRow& r : report.rows) emit(cells(r));
  return out;
}

std::string to_table(const EvaluationReport& report) {
  std::vector<std::vector<std::string>> grid{header(report.cutoffs)};
  grid.front().erase(grid.front().begin());
  grid.front().front() = "Approach";
  for (const MetricRow& r : report.rows) {
    auto row = cells(r);
    row.erase(row.begin());
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  const auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += "  ";
      const std::size_t pad = widths[i] - row[i].size();
      if (i == 0) {
        out += row[i] + std::string(pad, ' ');
      } else {
        out += std::string(pad, ' ') + row[i];
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out.push_back('\n');
  };
  emit(grid.front());
  std::size_t total = 0;
  for (const std::size_t w : widths) total += w;
  out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
  for (std::size_t i = 1; i < grid.size(); ++i) emit(grid[i]);
  return out;
}

}  // namespace learnrec::eval
