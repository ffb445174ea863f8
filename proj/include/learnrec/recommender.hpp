#pragma once

#include <optional>
#include <string>

#include "learnrec/engine.hpp"
#include "learnrec/profiles.hpp"
#include "learnrec/store.hpp"

namespace learnrec {

/// One recommendation request as clients phrase it. Unset optionals fall
/// back to the selected profile.
struct RecommendRequest {
  profiles::Algorithm algorithm = profiles::Algorithm::popular;
  std::string user;
  std::string resource;
  std::optional<std::size_t> k;
  std::optional<engine::Signal> signal;
  std::optional<double> lambda;
  std::optional<std::string> goal;
  std::optional<std::string> profile_id;
};

/// Profile a request resolves to: the explicit id, "cf-tags" for tag-signal
/// CF, otherwise the algorithm's default.
std::string resolve_profile_id(const RecommendRequest& request);

/// Runs the request's use case with `profile` and stamps the profile version.
/// Throws ValidationError for missing/invalid parameters and NotFoundError
/// for unknown resources.
engine::RankedList recommend(const engine::Engine& engine, const profiles::RecommendationProfile& profile,
                             const RecommendRequest& request);

/// Snapshots the store and the profile at request start, then runs.
engine::RankedList recommend(const store::Store& store, const profiles::ProfileRegistry& registry,
                             const RecommendRequest& request);

}  // namespace learnrec
