#include "learnrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "learnrec/error.hpp"

namespace learnrec::synth {
namespace {

// mt19937_64 output is fixed by the standard; the distributions below are
// hand-rolled so that files are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform() * static_cast<double>(hi - lo));
  }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

constexpr const char* kSyllables[] = {"ma", "te", "ri", "ca", "lo", "gi", "so", "ne", "tu", "ra", "pe", "di",
                                      "va", "co", "li", "sa", "bo", "fu", "na", "le", "mi", "to", "cu", "re",
                                      "ta", "ge", "o",  "ba", "ni", "du", "ve", "zo", "pi", "ru", "se", "me"};

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {}

  std::string fresh() {
    for (;;) {
      std::string word;
      const std::size_t syllables = 2 + rng_.below(3);
      for (std::size_t i = 0; i < syllables; ++i) word += kSyllables[rng_.below(std::size(kSyllables))];
      if (used_.insert(word).second) return word;
    }
  }

  std::vector<std::string> vocabulary(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(fresh());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::string padded(char prefix, std::size_t value, std::size_t total) {
  const int width = static_cast<int>(std::to_string(total > 0 ? total - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

std::string sentence(Rng& rng, const std::vector<std::string>& topic_words, const std::vector<std::string>& common,
                     std::size_t length) {
  std::string out;
  for (std::size_t i = 0; i < length; ++i) {
    const auto& pool = rng.chance(0.7) ? topic_words : common;
    std::string word = pool[rng.below(pool.size())];
    if (i == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
    if (i) out.push_back(' ');
    out += word;
  }
  out.push_back('.');
  return out;
}

constexpr std::int64_t kMinute = 60'000;
constexpr std::int64_t kDay = 86'400'000;

}  // namespace

void SynthConfig::validate() const {
  const auto probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
  };
  if (n_users == 0) throw ValidationError("n_users must be positive");
  if (n_resources == 0) throw ValidationError("n_resources must be positive");
  if (n_topics == 0 || n_topics > n_resources) throw ValidationError("n_topics must lie in [1, n_resources]");
  probability(p_topic_click, "p_topic_click");
  probability(q_topic_tag, "q_topic_tag");
  probability(tagger_fraction, "tagger_fraction");
  if (q_topic_tag < p_topic_click) throw ValidationError("q_topic_tag must be >= p_topic_click");
  if (!(activity_tail > 0.0)) throw ValidationError("activity_tail must be positive");
  if (!(tags_per_tagger >= 1.0)) throw ValidationError("tags_per_tagger must be >= 1");
  if (tag_vocabulary_per_topic == 0 || text_vocabulary_per_topic == 0) {
    throw ValidationError("vocabulary sizes must be positive");
  }
  if (start_ms < 0 || span_ms <= 0) throw ValidationError("timeline must be non-negative and non-empty");
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  WordFactory words(rng);

  const std::size_t topics = config.n_topics;
  std::vector<std::string> topic_names = words.vocabulary(topics);
  std::vector<std::vector<std::string>> text_vocab(topics);
  std::vector<std::vector<std::string>> tag_vocab(topics);
  for (std::size_t t = 0; t < topics; ++t) {
    text_vocab[t] = words.vocabulary(config.text_vocabulary_per_topic);
    tag_vocab[t] = words.vocabulary(config.tag_vocabulary_per_topic);
  }
  const std::vector<std::string> common = words.vocabulary(config.text_vocabulary_per_topic);

  Dataset out;

  // Resources: topic r mod T, so each topic owns a contiguous residue class.
  std::vector<std::vector<std::size_t>> by_topic(topics);
  out.resources.reserve(config.n_resources);
  for (std::size_t r = 0; r < config.n_resources; ++r) {
    const std::size_t topic = r % topics;
    by_topic[topic].push_back(r);
    Resource res;
    res.resource_id = padded('r', r, config.n_resources);
    res.title = sentence(rng, text_vocab[topic], text_vocab[topic], 3);
    res.title.pop_back();
    const std::size_t sentences = 1 + rng.below(5);
    const std::size_t mean_length = 4 + rng.below(14);
    for (std::size_t s = 0; s < sentences; ++s) {
      if (s) res.description.push_back(' ');
      const std::size_t length = std::max<std::size_t>(2, mean_length + rng.below(5) - 2);
      res.description += sentence(rng, text_vocab[topic], common, length);
    }
    res.categories.push_back(topic_names[topic]);
    out.resources.push_back(std::move(res));
  }

  struct Timed {
    Interaction interaction;
    std::size_t order;
  };
  std::vector<Timed> clicks;
  const std::int64_t last_start = config.start_ms + config.span_ms * 9 / 10;

  for (std::size_t u = 0; u < config.n_users; ++u) {
    const std::string user_id = padded('u', u, config.n_users);
    const std::size_t topic = rng.below(topics);
    const double pareto = std::pow(rng.uniform_open_low(), -1.0 / config.activity_tail);
    const auto activity = static_cast<std::size_t>(
        std::clamp(std::floor(pareto), 1.0, static_cast<double>(config.n_resources)));

    const std::int64_t user_start = rng.between(config.start_ms, last_start);
    std::int64_t t = user_start;
    for (std::size_t c = 0; c < activity; ++c) {
      if (c) t += rng.between(kMinute, 3 * kDay);
      const std::size_t r = rng.chance(config.p_topic_click) ? by_topic[topic][rng.below(by_topic[topic].size())]
                                                             : rng.below(config.n_resources);
      clicks.push_back(Timed{Interaction{user_id, out.resources[r].resource_id, t, InteractionKind::click},
                             clicks.size()});
    }
    const std::int64_t user_end = t;

    if (!rng.chance(config.tagger_fraction)) continue;
    // Geometric count with the configured mean, at least one.
    const double stop = 1.0 / config.tags_per_tagger;
    std::size_t n_tags = 1;
    if (stop < 1.0) {
      n_tags += static_cast<std::size_t>(std::floor(std::log(rng.uniform_open_low()) / std::log(1.0 - stop)));
    }
    for (std::size_t i = 0; i < n_tags; ++i) {
      std::string tag;
      std::size_t r;
      if (rng.chance(config.q_topic_tag)) {
        tag = tag_vocab[topic][rng.below(tag_vocab[topic].size())];
        r = by_topic[topic][rng.below(by_topic[topic].size())];
      } else {
        const auto& vocab = tag_vocab[rng.below(topics)];
        tag = vocab[rng.below(vocab.size())];
        r = rng.below(config.n_resources);
      }
      const std::int64_t when = std::max(config.start_ms, rng.between(user_start - 60 * kDay, user_end + 1));
      out.tags.push_back(TagAssignment{user_id, out.resources[r].resource_id, std::move(tag), when});
    }
  }

  std::stable_sort(clicks.begin(), clicks.end(), [](const Timed& a, const Timed& b) {
    return a.interaction.timestamp_ms < b.interaction.timestamp_ms;
  });
  out.interactions.reserve(clicks.size());
  for (Timed& c : clicks) out.interactions.push_back(std::move(c.interaction));
  std::stable_sort(out.tags.begin(), out.tags.end(),
                   [](const TagAssignment& a, const TagAssignment& b) { return a.timestamp_ms < b.timestamp_ms; });
  return out;
}

}  // namespace learnrec::synth
