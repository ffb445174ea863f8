#include "learnrec/recommender.hpp"

#include "learnrec/error.hpp"

namespace learnrec {

using profiles::Algorithm;

std::string resolve_profile_id(const RecommendRequest& request) {
  if (request.profile_id) return *request.profile_id;
  if (request.algorithm == Algorithm::cf_interactions && request.signal == engine::Signal::tags) {
    return std::string(profiles::default_profile_id(Algorithm::cf_tags));
  }
  if (request.algorithm == Algorithm::cf_tags && request.signal == engine::Signal::interactions) {
    return std::string(profiles::default_profile_id(Algorithm::cf_interactions));
  }
  return std::string(profiles::default_profile_id(request.algorithm));
}

namespace {

const std::string& require(const std::string& value, const char* name) {
  if (value.empty()) throw ValidationError(std::string("missing parameter '") + name + "'");
  return value;
}

}  // namespace

engine::RankedList recommend(const engine::Engine& engine, const profiles::RecommendationProfile& profile,
                             const RecommendRequest& request) {
  const std::size_t k = request.k.value_or(profile.k_default);
  engine::RankedList list;
  switch (request.algorithm) {
    case Algorithm::popular:
      list = engine.recommend_popular(k);
      break;
    case Algorithm::cf_interactions:
    case Algorithm::cf_tags: {
      const engine::Signal signal = request.signal.value_or(profile.signal);
      list = engine.recommend_cf(require(request.user, "user"), k, signal, profile.n);
      break;
    }
    case Algorithm::content_based:
      list = engine.recommend_cbf(require(request.user, "user"), k);
      break;
    case Algorithm::similar_resources:
      list = engine.similar_resources(require(request.resource, "resource"), k);
      break;
    case Algorithm::contextual:
      list = engine.recommend_contextual(require(request.user, "user"), require(request.resource, "resource"), k,
                                         profile.n);
      break;
    case Algorithm::goal: {
      const engine::GoalSpec goal = engine::GoalSpec::parse(request.goal.value_or(profile.goal));
      engine::GoalParams params{profile.n, request.lambda.value_or(profile.lambda), profile.headroom};
      list = engine.recommend_goal(require(request.user, "user"), goal, k, params);
      break;
    }
  }
  list.profile_version = profile.version;
  return list;
}

engine::RankedList recommend(const store::Store& store, const profiles::ProfileRegistry& registry,
                             const RecommendRequest& request) {
  const auto profile = registry.get_shared(resolve_profile_id(request));
  const engine::Engine engine(store.snapshot());
  return recommend(engine, *profile, request);
}

}  // namespace learnrec
