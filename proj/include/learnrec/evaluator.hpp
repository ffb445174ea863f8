#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "learnrec/engine.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/types.hpp"

namespace learnrec::eval {

using RelevantSet = std::set<std::string>;

/// Per-user chronological train/test partition.
struct SplitResult {
  /// Every raw interaction whose (user, resource) pair stayed in training,
  /// in input order.
  std::vector<Interaction> train;
  /// Held-out resources per user (the most recent ones).
  std::map<std::string, RelevantSet> test;
  /// Users with at least one test item, sorted.
  std::vector<std::string> test_users;
  /// Earliest test timestamp per test user.
  std::map<std::string, std::int64_t> test_start_ms;
};

/// For each user with m distinct resources, the ceil(test_fraction * m) most
/// recent go to test. Duplicate pairs collapse to their latest timestamp
/// first; equal timestamps keep input order. Throws ValidationError unless
/// 0 < test_fraction < 1.
SplitResult chronological_split(std::span<const Interaction> interactions, double test_fraction);

/// Training view of a full dataset: train interactions, all resources, and
/// the tag assignments a test user made before their first test interaction
/// on resources outside their test set.
Dataset training_dataset(const Dataset& full, const SplitResult& split);

// Binary-relevance ranking metrics over the top k of `recommended`.
// Each throws ValidationError when k == 0.
double recall_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);
double precision_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);
double f1_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);
double mrr_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);
double map_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);
double ndcg_at_k(std::span<const std::string> recommended, const RelevantSet& relevant, std::size_t k);

/// Fraction of lists that are non-empty. Throws ValidationError when there are no lists.
double coverage(std::span<const engine::RankedList> per_user_lists);

struct MetricCutoffs {
  std::size_t recall = 20;
  std::size_t precision = 1;
  std::size_t f1 = 10;
  std::size_t mrr = 20;
  std::size_t map = 20;
  std::size_t ndcg = 20;

  std::size_t list_length() const;
};

struct MetricRow {
  profiles::Algorithm algorithm = profiles::Algorithm::popular;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double mrr = 0.0;
  double map = 0.0;
  double ndcg = 0.0;
  double coverage = 0.0;
  std::size_t covered_users = 0;
  std::size_t n_test_users = 0;
};

struct EvaluationReport {
  MetricCutoffs cutoffs;
  std::vector<MetricRow> rows;  // ordered UC1, UC2, ...

  const MetricRow& row(profiles::Algorithm algorithm) const;
};

/// Runs each algorithm for every test user against a store built from
/// `training` and averages metrics over all test users (empty lists score 0).
/// Deterministic for any thread count.
EvaluationReport evaluate(std::span<const profiles::Algorithm> algorithms, const SplitResult& split,
                          const Dataset& training, const profiles::ProfileRegistry& registry,
                          const MetricCutoffs& cutoffs = {}, unsigned threads = 0);

struct EvalConfig {
  std::vector<profiles::Algorithm> algorithms{profiles::Algorithm::popular, profiles::Algorithm::cf_interactions,
                                              profiles::Algorithm::cf_tags};
  double test_fraction = 0.2;
  MetricCutoffs cutoffs;
  unsigned threads = 0;
};

/// Split, build the training store and evaluate; the path shared by the CLI
/// and the service.
EvaluationReport run_evaluation(const Dataset& dataset, const EvalConfig& config,
                                const profiles::ProfileRegistry& registry);

/// CSV with a header row, numbers fixed at 4 decimals.
std::string to_csv(const EvaluationReport& report);
/// Aligned plain-text table with the same columns.
std::string to_table(const EvaluationReport& report);

}  // namespace learnrec::eval
