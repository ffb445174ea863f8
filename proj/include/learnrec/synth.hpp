#pragma once

#include <cstddef>
#include <cstdint>

#include "learnrec/types.hpp"

namespace learnrec::synth {

/// Parameters of the latent-topic implicit-feedback generator.
struct SynthConfig {
  std::size_t n_users = 2000;
  std::size_t n_resources = 300;
  std::size_t n_topics = 10;
  /// Probability that a click lands on a resource of the user's own topic
  /// (otherwise uniform over the catalog).
  double p_topic_click = 0.6;
  /// Probability that a tag is drawn from the user's own topic vocabulary and
  /// applied to an own-topic resource. Must be >= p_topic_click.
  double q_topic_tag = 0.95;
  /// Pareto shape of per-user click counts; smaller is heavier-tailed.
  double activity_tail = 1.2;
  std::uint64_t seed = 1;

  /// Fraction of users who tag at all.
  double tagger_fraction = 0.6;
  /// Mean number of tag assignments per tagging user.
  double tags_per_tagger = 4.0;
  std::size_t tag_vocabulary_per_topic = 12;
  std::size_t text_vocabulary_per_topic = 40;

  /// Start of the simulated timeline and its length.
  std::int64_t start_ms = 1488067200000;  // 2017-02-26
  std::int64_t span_ms = 39657600000;     // ~15 months

  /// Throws ValidationError on out-of-range values.
  void validate() const;
};

/// Deterministic for a given config: same seed, same records in the same order.
Dataset generate_synthetic(const SynthConfig& config);

}  // namespace learnrec::synth
