#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "learnrec/store.hpp"

namespace learnrec::engine {

/// Which user signal defines the neighborhood in collaborative filtering.
enum class Signal : std::uint8_t { interactions, tags };

std::string_view to_string(Signal signal);
Signal parse_signal(std::string_view name);

struct RankedEntry {
  std::string resource_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RankedEntry&) const = default;
};

/// Ranked recommendation output. Scores are non-increasing with rank, ranks
/// run 1..size(), resource ids are unique.
struct RankedList {
  std::vector<RankedEntry> entries;
  std::string algorithm_id;
  std::uint64_t profile_version = 0;
  /// Set when the target has no usable signal; entries are then empty.
  bool cold_start = false;
  /// Neighbors that contributed candidates (CF-style algorithms only).
  std::size_t neighborhood_size = 0;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  std::vector<std::string> ids() const;
};

struct Neighbor {
  std::string user_id;
  double similarity = 0.0;
};

/// Most similar users first; never contains the target; all similarities > 0.
using Neighborhood = std::vector<Neighbor>;

/// Learning goal used to re-rank in recommend_goal. Text form: "harder",
/// "easier" or "topic:<term>".
struct GoalSpec {
  enum class Kind : std::uint8_t { harder, easier, topic };
  Kind kind = Kind::harder;
  std::string term;

  static GoalSpec parse(std::string_view text);
  std::string to_string() const;
};

struct GoalParams {
  std::size_t neighborhood_size = 20;
  double lambda = 0.5;
  /// Base list is fetched with headroom * k entries before re-ranking.
  std::size_t headroom = 5;
};

struct EngineOptions {
  /// Drop zero-score entries from every list.
  bool suppress_zero_scores = true;
};

/// Stateless recommendation algorithms over one store snapshot. Every method
/// is const and safe to call concurrently.
class Engine {
 public:
  explicit Engine(store::StoreSnapshot snapshot, EngineOptions options = {});

  const store::StoreSnapshot& snapshot() const { return snapshot_; }

  /// Resources by interaction count; ties by resource id.
  RankedList recommend_popular(std::size_t k) const;

  /// Cosine over distinct-interaction sets.
  double user_similarity_interactions(std::string_view u, std::string_view v) const;
  /// Cosine over tag-frequency vectors.
  double user_similarity_tags(std::string_view u, std::string_view v) const;

  /// Top-n users by the chosen similarity, ties by user id.
  Neighborhood neighborhood(std::string_view user, Signal signal, std::size_t n) const;

  /// User-based CF: candidates are the neighbors' resources, scored by the
  /// sum of neighbor similarities; the user's own resources are excluded.
  RankedList recommend_cf(std::string_view user, std::size_t k, Signal signal, std::size_t n) const;

  /// Content-based: rank unseen resources by cosine to the centroid of the
  /// user's resource vectors.
  RankedList recommend_cbf(std::string_view user, std::size_t k) const;

  /// Resources most similar in text to `resource`. Throws NotFoundError.
  RankedList similar_resources(std::string_view resource, std::size_t k) const;

  /// CF restricted to neighbors who also interacted with `context`. Throws
  /// NotFoundError for an unknown context resource.
  RankedList recommend_contextual(std::string_view user, std::string_view context, std::size_t k,
                                  std::size_t n) const;

  /// Re-ranks the CF list (falling back to most-popular) by blending the
  /// min-max normalized base score with a goal feature.
  RankedList recommend_goal(std::string_view user, const GoalSpec& goal, std::size_t k,
                            const GoalParams& params) const;

  /// Normalized readability complexity in [0, 1]. Throws NotFoundError.
  double complexity_score(std::string_view resource) const;

  /// Goal feature in [0, 1] for one resource.
  double goal_feature(store::ResourceIndex resource, const GoalSpec& goal) const;

 private:
  struct Scored {
    store::ResourceIndex resource;
    double score;
  };
  struct IndexedNeighbor {
    store::UserIndex user;
    double similarity;
  };

  std::vector<IndexedNeighbor> top_neighbors(std::vector<IndexedNeighbor> candidates, std::size_t n) const;
  std::vector<IndexedNeighbor> interaction_neighbors(store::UserIndex user) const;
  std::vector<IndexedNeighbor> tag_neighbors(store::UserIndex user) const;
  double interaction_similarity(store::UserIndex u, store::UserIndex v) const;
  double tag_similarity(store::UserIndex u, store::UserIndex v) const;
  RankedList score_from_neighbors(store::UserIndex user, const std::vector<IndexedNeighbor>& neighbors,
                                  std::size_t k, std::optional<store::ResourceIndex> exclude) const;
  RankedList finish(std::vector<Scored> scored, std::size_t k) const;

  store::StoreSnapshot snapshot_;
  EngineOptions options_;
};

}  // namespace learnrec::engine
