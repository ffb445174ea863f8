#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "learnrec/engine.hpp"

namespace learnrec::profiles {

/// The seven recommendation use cases, serialized as "uc1".."uc7".
enum class Algorithm : std::uint8_t {
  popular = 1,
  cf_interactions = 2,
  cf_tags = 3,
  content_based = 4,
  similar_resources = 5,
  contextual = 6,
  goal = 7,
};

std::string_view to_string(Algorithm algorithm);
/// Accepts "uc1".."uc7" and the short names (popular, cf, cf-tags, cbf, similar, contextual, goal).
Algorithm parse_algorithm(std::string_view name);
/// Table label, e.g. "UC3: CF_t".
std::string_view display_name(Algorithm algorithm);
std::vector<Algorithm> all_algorithms();

/// Named, versioned parameter set for one algorithm.
struct RecommendationProfile {
  std::string profile_id;
  Algorithm algorithm = Algorithm::popular;
  std::size_t n = 20;
  std::size_t k_default = 20;
  double lambda = 0.5;
  engine::Signal signal = engine::Signal::interactions;
  std::size_t headroom = 5;
  std::string goal = "harder";
  std::uint64_t version = 0;

  /// Throws ValidationError when any field invariant fails.
  void validate() const;
  bool operator==(const RecommendationProfile&) const = default;
};

nlohmann::json to_json(const RecommendationProfile& profile);
/// Missing fields fall back to `base`; the version is always taken from `base`.
RecommendationProfile profile_from_json(const nlohmann::json& doc, const RecommendationProfile& base);

/// Profile used by default for each use case ("cf-default", "cf-tags", ...).
std::string_view default_profile_id(Algorithm algorithm);

/// Built-in profiles, all at version 1.
std::vector<RecommendationProfile> default_profiles();

/// Registry of profiles. Reads return the current immutable snapshot without
/// blocking writers; updates are serialized and swap in atomically.
class ProfileRegistry {
 public:
  ProfileRegistry();
  explicit ProfileRegistry(const std::vector<RecommendationProfile>& seed);

  /// Throws NotFoundError.
  std::shared_ptr<const RecommendationProfile> get_shared(std::string_view profile_id) const;
  RecommendationProfile get(std::string_view profile_id) const { return *get_shared(profile_id); }

  /// Validates and installs `profile` (creating it if new). Returns the new
  /// version; the version field of the argument is ignored.
  std::uint64_t set(RecommendationProfile profile);

  std::vector<RecommendationProfile> list() const;

  /// Applies a profiles.json document: an array of profile objects or
  /// {"profiles": [...]}. Each entry is merged over the current profile of
  /// the same id. Throws IoError / ValidationError.
  void load_file(const std::filesystem::path& path);
  void load_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

 private:
  using Map = std::map<std::string, std::shared_ptr<const RecommendationProfile>, std::less<>>;

  std::mutex write_mu_;
  std::shared_ptr<const Map> current_;
};

}  // namespace learnrec::profiles
