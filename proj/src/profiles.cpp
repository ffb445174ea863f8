#include "learnrec/profiles.hpp"

#include <array>
#include <cmath>

#include "learnrec/error.hpp"
#include "learnrec/io.hpp"
#include "learnrec/text.hpp"

namespace learnrec::profiles {

using nlohmann::json;

namespace {

struct AlgorithmInfo {
  Algorithm algorithm;
  std::string_view code;
  std::string_view short_name;
  std::string_view label;
  std::string_view profile_id;
};

constexpr std::array<AlgorithmInfo, 7> kAlgorithms{{
    {Algorithm::popular, "uc1", "popular", "UC1: MP", "uc1-popular"},
    {Algorithm::cf_interactions, "uc2", "cf", "UC2: CF_i", "cf-default"},
    {Algorithm::cf_tags, "uc3", "cf-tags", "UC3: CF_t", "cf-tags"},
    {Algorithm::content_based, "uc4", "cbf", "UC4: CBF", "cbf-default"},
    {Algorithm::similar_resources, "uc5", "similar", "UC5: SIM", "similar-default"},
    {Algorithm::contextual, "uc6", "contextual", "UC6: CTX", "contextual-default"},
    {Algorithm::goal, "uc7", "goal", "UC7: GOAL", "goal-default"},
}};

const AlgorithmInfo& info(Algorithm algorithm) {
  for (const AlgorithmInfo& i : kAlgorithms) {
    if (i.algorithm == algorithm) return i;
  }
  throw ValidationError("unknown algorithm");
}

template <typename T>
T field_or(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("profile field '") + key + "' has the wrong type");
  }
}

std::size_t positive_field(const json& doc, const char* key, std::size_t fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw ValidationError(std::string("profile field '") + key + "' must be an integer");
  const auto value = it->get<std::int64_t>();
  if (value < 1) throw ValidationError(std::string("profile field '") + key + "' must be >= 1");
  return static_cast<std::size_t>(value);
}

}  // namespace

std::string_view to_string(Algorithm algorithm) { return info(algorithm).code; }
std::string_view display_name(Algorithm algorithm) { return info(algorithm).label; }
std::string_view default_profile_id(Algorithm algorithm) { return info(algorithm).profile_id; }

Algorithm parse_algorithm(std::string_view name) {
  const std::string lowered = text::to_lower(text::trim(name));
  for (const AlgorithmInfo& i : kAlgorithms) {
    if (lowered == i.code || lowered == i.short_name) return i.algorithm;
  }
  throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

std::vector<Algorithm> all_algorithms() {
  std::vector<Algorithm> out;
  for (const AlgorithmInfo& i : kAlgorithms) out.push_back(i.algorithm);
  return out;
}

void RecommendationProfile::validate() const {
  validate_id(profile_id, "profile_id");
  if (n < 1) throw ValidationError("n must be >= 1");
  if (k_default < 1) throw ValidationError("k_default must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  if (headroom < 1) throw ValidationError("headroom must be >= 1");
  engine::GoalSpec::parse(goal);
}

json to_json(const RecommendationProfile& p) {
  return json{{"profile_id", p.profile_id},
              {"algorithm_id", std::string(to_string(p.algorithm))},
              {"n", p.n},
              {"k_default", p.k_default},
              {"lambda", p.lambda},
              {"signal", std::string(engine::to_string(p.signal))},
              {"headroom", p.headroom},
              {"goal", p.goal},
              {"version", p.version}};
}

RecommendationProfile profile_from_json(const json& doc, const RecommendationProfile& base) {
  if (!doc.is_object()) throw ValidationError("profile must be a JSON object");
  RecommendationProfile p = base;
  p.profile_id = field_or<std::string>(doc, "profile_id", base.profile_id);
  if (auto it = doc.find("algorithm_id"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("profile field 'algorithm_id' must be a string");
    p.algorithm = parse_algorithm(it->get<std::string>());
  }
  p.n = positive_field(doc, "n", base.n);
  p.k_default = positive_field(doc, "k_default", base.k_default);
  if (auto it = doc.find("lambda"); it != doc.end() && !it->is_null()) {
    if (!it->is_number()) throw ValidationError("profile field 'lambda' must be a number");
    p.lambda = it->get<double>();
  }
  if (auto it = doc.find("signal"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("profile field 'signal' must be a string");
    p.signal = engine::parse_signal(it->get<std::string>());
  }
  p.headroom = positive_field(doc, "headroom", base.headroom);
  p.goal = field_or<std::string>(doc, "goal", base.goal);
  p.version = base.version;
  p.validate();
  return p;
}

std::vector<RecommendationProfile> default_profiles() {
  std::vector<RecommendationProfile> out;
  for (const AlgorithmInfo& i : kAlgorithms) {
    RecommendationProfile p;
    p.profile_id = std::string(i.profile_id);
    p.algorithm = i.algorithm;
    p.signal = i.algorithm == Algorithm::cf_tags ? engine::Signal::tags : engine::Signal::interactions;
    p.version = 1;
    out.push_back(std::move(p));
  }
  return out;
}

ProfileRegistry::ProfileRegistry() : ProfileRegistry(default_profiles()) {}

ProfileRegistry::ProfileRegistry(const std::vector<RecommendationProfile>& seed) {
  auto map = std::make_shared<Map>();
  for (RecommendationProfile p : seed) {
    p.validate();
    if (p.version == 0) p.version = 1;
    std::string id = p.profile_id;
    (*map)[std::move(id)] = std::make_shared<const RecommendationProfile>(std::move(p));
  }
  current_ = std::move(map);
}

std::shared_ptr<const RecommendationProfile> ProfileRegistry::get_shared(std::string_view profile_id) const {
  const auto map = std::atomic_load(&current_);
  auto it = map->find(profile_id);
  if (it == map->end()) throw NotFoundError("unknown profile '" + std::string(profile_id) + "'");
  return it->second;
}

std::uint64_t ProfileRegistry::set(RecommendationProfile profile) {
  profile.validate();
  std::lock_guard lock(write_mu_);
  const auto old = std::atomic_load(&current_);
  auto next = std::make_shared<Map>(*old);
  auto it = next->find(profile.profile_id);
  profile.version = it == next->end() ? 1 : it->second->version + 1;
  const std::uint64_t version = profile.version;
  std::string id = profile.profile_id;
  (*next)[std::move(id)] = std::make_shared<const RecommendationProfile>(std::move(profile));
  std::atomic_store(&current_, std::shared_ptr<const Map>(std::move(next)));
  return version;
}

std::vector<RecommendationProfile> ProfileRegistry::list() const {
  const auto map = std::atomic_load(&current_);
  std::vector<RecommendationProfile> out;
  out.reserve(map->size());
  for (const auto& [id, p] : *map) out.push_back(*p);
  return out;
}

void ProfileRegistry::load_json(const json& doc) {
  const json* entries = &doc;
  if (doc.is_object()) {
    auto it = doc.find("profiles");
    if (it == doc.end()) throw ValidationError("profiles document needs a 'profiles' array");
    entries = &*it;
  }
  if (!entries->is_array()) throw ValidationError("profiles document must be an array");
  // Validate everything before applying anything.
  std::vector<RecommendationProfile> parsed;
  for (const json& entry : *entries) {
    if (!entry.is_object()) throw ValidationError("profile entry must be an object");
    const std::string id = field_or<std::string>(entry, "profile_id", "");
    RecommendationProfile base;
    base.profile_id = id;
    try {
      base = get(id);
    } catch (const NotFoundError&) {
    }
    parsed.push_back(profile_from_json(entry, base));
  }
  for (RecommendationProfile& p : parsed) set(std::move(p));
}

void ProfileRegistry::load_file(const std::filesystem::path& path) {
  const std::string contents = io::read_file(path);
  const json doc = json::parse(contents, nullptr, false);
  if (doc.is_discarded()) throw ValidationError(path.string() + ": invalid JSON");
  load_json(doc);
}

json ProfileRegistry::to_json() const {
  json out = json::array();
  for (const RecommendationProfile& p : list()) out.push_back(profiles::to_json(p));
  return json{{"profiles", std::move(out)}};
}

}  // namespace learnrec::profiles
