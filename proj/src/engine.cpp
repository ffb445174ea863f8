#include "learnrec/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "learnrec/error.hpp"
#include "learnrec/text.hpp"

namespace learnrec::engine {

using store::ResourceIndex;
using store::UserIndex;

std::string_view to_string(Signal signal) { return signal == Signal::tags ? "tags" : "interactions"; }

Signal parse_signal(std::string_view name) {
  const std::string lowered = text::to_lower(text::trim(name));
  if (lowered == "interactions" || lowered == "i") return Signal::interactions;
  if (lowered == "tags" || lowered == "t") return Signal::tags;
  throw ValidationError("unknown signal '" + std::string(name) + "' (expected interactions or tags)");
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const RankedEntry& e : entries) out.push_back(e.resource_id);
  return out;
}

GoalSpec GoalSpec::parse(std::string_view spec) {
  const std::string_view trimmed = text::trim(spec);
  const std::string lowered = text::to_lower(trimmed);
  if (lowered == "harder") return GoalSpec{Kind::harder, {}};
  if (lowered == "easier") return GoalSpec{Kind::easier, {}};
  if (lowered.starts_with("topic:")) {
    std::string term = text::to_lower(text::trim(std::string_view(lowered).substr(6)));
    if (term.empty()) throw ValidationError("topic goal needs a term");
    return GoalSpec{Kind::topic, std::move(term)};
  }
  throw ValidationError("unknown goal '" + std::string(spec) + "' (expected harder, easier or topic:<term>)");
}

std::string GoalSpec::to_string() const {
  switch (kind) {
    case Kind::harder:
      return "harder";
    case Kind::easier:
      return "easier";
    case Kind::topic:
      return "topic:" + term;
  }
  return "harder";
}

namespace {

void require_positive(std::size_t value, const char* name) {
  if (value == 0) throw ValidationError(std::string(name) + " must be a positive integer");
}

std::size_t sorted_intersection_size(std::span<const UserIndex> a, std::span<const UserIndex> b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

double binary_cosine(std::size_t overlap, std::size_t a, std::size_t b) {
  if (overlap == 0 || a == 0 || b == 0) return 0.0;
  return static_cast<double>(overlap) / std::sqrt(static_cast<double>(a) * static_cast<double>(b));
}

}  // namespace

Engine::Engine(store::StoreSnapshot snapshot, EngineOptions options)
    : snapshot_(std::move(snapshot)), options_(options) {}

RankedList Engine::finish(std::vector<Scored> scored, std::size_t k) const {
  if (options_.suppress_zero_scores) {
    std::erase_if(scored, [](const Scored& s) { return !(s.score > 0.0); });
  }
  const auto better = [this](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto pa = snapshot_.popularity(a.resource);
    const auto pb = snapshot_.popularity(b.resource);
    if (pa != pb) return pa > pb;
    return snapshot_.resource_id(a.resource) < snapshot_.resource_id(b.resource);
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  RankedList list;
  list.entries.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    list.entries.push_back(RankedEntry{snapshot_.resource_id(scored[i].resource), scored[i].score, i + 1});
  }
  return list;
}

RankedList Engine::recommend_popular(std::size_t k) const {
  require_positive(k, "k");
  std::vector<Scored> scored;
  scored.reserve(snapshot_.resource_count());
  for (ResourceIndex r = 0; r < snapshot_.resource_count(); ++r) {
    scored.push_back(Scored{r, static_cast<double>(snapshot_.popularity(r))});
  }
  RankedList list = finish(std::move(scored), k);
  list.algorithm_id = "uc1";
  return list;
}

double Engine::interaction_similarity(UserIndex u, UserIndex v) const {
  const auto iu = snapshot_.user_items(u);
  const auto iv = snapshot_.user_items(v);
  return binary_cosine(sorted_intersection_size(iu, iv), iu.size(), iv.size());
}

double Engine::tag_similarity(UserIndex u, UserIndex v) const {
  const auto tu = snapshot_.user_tags(u);
  const auto tv = snapshot_.user_tags(v);
  if (tu.empty() || tv.empty()) return 0.0;
  std::uint64_t dot = 0;
  auto a = tu.begin();
  auto b = tv.begin();
  while (a != tu.end() && b != tv.end()) {
    if (a->tag < b->tag) {
      ++a;
    } else if (b->tag < a->tag) {
      ++b;
    } else {
      dot += static_cast<std::uint64_t>(a->count) * b->count;
      ++a;
      ++b;
    }
  }
  if (dot == 0) return 0.0;
  return std::min(1.0, static_cast<double>(dot) / (snapshot_.user_tag_norm(u) * snapshot_.user_tag_norm(v)));
}

double Engine::user_similarity_interactions(std::string_view u, std::string_view v) const {
  const auto iu = snapshot_.find_user(u);
  const auto iv = snapshot_.find_user(v);
  if (!iu || !iv) return 0.0;
  return interaction_similarity(*iu, *iv);
}

double Engine::user_similarity_tags(std::string_view u, std::string_view v) const {
  const auto iu = snapshot_.find_user(u);
  const auto iv = snapshot_.find_user(v);
  if (!iu || !iv) return 0.0;
  return tag_similarity(*iu, *iv);
}

std::vector<Engine::IndexedNeighbor> Engine::interaction_neighbors(UserIndex user) const {
  const auto items = snapshot_.user_items(user);
  std::unordered_map<UserIndex, std::uint32_t> overlap;
  for (const ResourceIndex r : items) {
    for (const UserIndex v : snapshot_.resource_users(r)) {
      if (v != user) ++overlap[v];
    }
  }
  std::vector<IndexedNeighbor> out;
  out.reserve(overlap.size());
  for (const auto& [v, count] : overlap) {
    out.push_back(IndexedNeighbor{v, binary_cosine(count, items.size(), snapshot_.user_items(v).size())});
  }
  return out;
}

std::vector<Engine::IndexedNeighbor> Engine::tag_neighbors(UserIndex user) const {
  std::unordered_map<UserIndex, std::uint64_t> dots;
  for (const store::TagCount& tc : snapshot_.user_tags(user)) {
    for (const store::UserTagCount& uc : snapshot_.tag_users(tc.tag)) {
      if (uc.user != user) dots[uc.user] += static_cast<std::uint64_t>(tc.count) * uc.count;
    }
  }
  const double norm = snapshot_.user_tag_norm(user);
  std::vector<IndexedNeighbor> out;
  out.reserve(dots.size());
  for (const auto& [v, dot] : dots) {
    out.push_back(IndexedNeighbor{v, std::min(1.0, static_cast<double>(dot) / (norm * snapshot_.user_tag_norm(v)))});
  }
  return out;
}

std::vector<Engine::IndexedNeighbor> Engine::top_neighbors(std::vector<IndexedNeighbor> candidates,
                                                           std::size_t n) const {
  std::erase_if(candidates, [](const IndexedNeighbor& c) { return !(c.similarity > 0.0); });
  const auto better = [this](const IndexedNeighbor& a, const IndexedNeighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return snapshot_.user_id(a.user) < snapshot_.user_id(b.user);
  };
  const std::size_t keep = std::min(n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    better);
  candidates.resize(keep);
  return candidates;
}

Neighborhood Engine::neighborhood(std::string_view user, Signal signal, std::size_t n) const {
  require_positive(n, "n");
  const auto u = snapshot_.find_user(user);
  if (!u) return {};
  auto top = top_neighbors(signal == Signal::tags ? tag_neighbors(*u) : interaction_neighbors(*u), n);
  Neighborhood out;
  out.reserve(top.size());
  for (const IndexedNeighbor& nb : top) out.push_back(Neighbor{snapshot_.user_id(nb.user), nb.similarity});
  return out;
}

RankedList Engine::score_from_neighbors(UserIndex user, const std::vector<IndexedNeighbor>& neighbors,
                                        std::size_t k, std::optional<ResourceIndex> exclude) const {
  const auto own = snapshot_.user_items(user);
  const auto seen = [&](ResourceIndex r) {
    return std::binary_search(own.begin(), own.end(), r) || (exclude && *exclude == r);
  };
  // Sums accumulate in neighborhood order so equal inputs give identical bits.
  std::unordered_map<ResourceIndex, double> scores;
  std::vector<ResourceIndex> order;
  for (const IndexedNeighbor& nb : neighbors) {
    for (const ResourceIndex r : snapshot_.user_items(nb.user)) {
      if (seen(r)) continue;
      auto [it, inserted] = scores.try_emplace(r, 0.0);
      if (inserted) order.push_back(r);
      it->second += nb.similarity;
    }
  }
  std::vector<Scored> scored;
  scored.reserve(order.size());
  for (const ResourceIndex r : order) scored.push_back(Scored{r, scores[r]});
  RankedList list = finish(std::move(scored), k);
  list.neighborhood_size = neighbors.size();
  return list;
}

RankedList Engine::recommend_cf(std::string_view user, std::size_t k, Signal signal, std::size_t n) const {
  require_positive(k, "k");
  require_positive(n, "n");
  RankedList list;
  const auto u = snapshot_.find_user(user);
  const bool has_signal =
      u && (signal == Signal::tags ? !snapshot_.user_tags(*u).empty() : !snapshot_.user_items(*u).empty());
  if (!has_signal) {
    list.cold_start = true;
  } else {
    auto neighbors = top_neighbors(signal == Signal::tags ? tag_neighbors(*u) : interaction_neighbors(*u), n);
    list = score_from_neighbors(*u, neighbors, k, std::nullopt);
  }
  list.algorithm_id = signal == Signal::tags ? "uc3" : "uc2";
  return list;
}

RankedList Engine::recommend_contextual(std::string_view user, std::string_view context, std::size_t k,
                                        std::size_t n) const {
  require_positive(k, "k");
  require_positive(n, "n");
  const ResourceIndex ctx = snapshot_.require_resource(context);
  RankedList list;
  const auto u = snapshot_.find_user(user);
  if (!u || snapshot_.user_items(*u).empty()) {
    list.cold_start = true;
  } else {
    std::vector<IndexedNeighbor> candidates;
    for (const UserIndex v : snapshot_.resource_users(ctx)) {
      if (v != *u) candidates.push_back(IndexedNeighbor{v, interaction_similarity(*u, v)});
    }
    list = score_from_neighbors(*u, top_neighbors(std::move(candidates), n), k, ctx);
  }
  list.algorithm_id = "uc6";
  return list;
}

RankedList Engine::recommend_cbf(std::string_view user, std::size_t k) const {
  require_positive(k, "k");
  RankedList list;
  list.algorithm_id = "uc4";
  const auto u = snapshot_.find_user(user);
  if (!u) {
    list.cold_start = true;
    return list;
  }
  const auto own = snapshot_.user_items(*u);

  // Centroid of the user's resource vectors; stubs carry no text and are skipped.
  std::map<store::TermIndex, double> sums;
  std::size_t contributing = 0;
  for (const ResourceIndex r : own) {
    const store::TermVector& v = snapshot_.term_vector(r);
    if (v.empty()) continue;
    ++contributing;
    for (const auto& [term, w] : v.weights) sums[term] += w;
  }
  if (contributing == 0) {
    list.cold_start = true;
    return list;
  }
  store::TermVector centroid;
  centroid.weights.reserve(sums.size());
  double sq = 0.0;
  for (const auto& [term, w] : sums) {
    const double mean = w / static_cast<double>(contributing);
    centroid.weights.emplace_back(term, mean);
    sq += mean * mean;
  }
  centroid.norm = std::sqrt(sq);

  std::vector<Scored> scored;
  for (ResourceIndex r = 0; r < snapshot_.resource_count(); ++r) {
    if (std::binary_search(own.begin(), own.end(), r)) continue;
    const store::TermVector& v = snapshot_.term_vector(r);
    if (v.empty()) continue;
    scored.push_back(Scored{r, centroid.cosine(v)});
  }
  RankedList ranked = finish(std::move(scored), k);
  ranked.algorithm_id = "uc4";
  return ranked;
}

RankedList Engine::similar_resources(std::string_view resource, std::size_t k) const {
  require_positive(k, "k");
  const ResourceIndex target = snapshot_.require_resource(resource);
  const store::TermVector& tv = snapshot_.term_vector(target);
  std::vector<Scored> scored;
  if (!tv.empty()) {
    for (ResourceIndex r = 0; r < snapshot_.resource_count(); ++r) {
      if (r == target) continue;
      const store::TermVector& v = snapshot_.term_vector(r);
      if (v.empty()) continue;
      scored.push_back(Scored{r, tv.cosine(v)});
    }
  }
  // Zero-score entries never qualify as alternatives.
  std::erase_if(scored, [](const Scored& s) { return !(s.score > 0.0); });
  RankedList list = finish(std::move(scored), k);
  list.algorithm_id = "uc5";
  return list;
}

double Engine::complexity_score(std::string_view resource) const {
  return snapshot_.complexity(snapshot_.require_resource(resource));
}

double Engine::goal_feature(ResourceIndex resource, const GoalSpec& goal) const {
  switch (goal.kind) {
    case GoalSpec::Kind::harder:
      return snapshot_.complexity(resource);
    case GoalSpec::Kind::easier:
      return 1.0 - snapshot_.complexity(resource);
    case GoalSpec::Kind::topic: {
      if (const Resource* meta = snapshot_.resource(resource)) {
        for (const std::string& category : meta->categories) {
          if (text::to_lower(text::trim(category)) == goal.term) return 1.0;
        }
      }
      return snapshot_.query_vector(goal.term).cosine(snapshot_.term_vector(resource));
    }
  }
  return 0.0;
}

RankedList Engine::recommend_goal(std::string_view user, const GoalSpec& goal, std::size_t k,
                                  const GoalParams& params) const {
  require_positive(k, "k");
  require_positive(params.headroom, "headroom");
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");

  const std::size_t base_k = k * params.headroom;
  RankedList base = recommend_cf(user, base_k, Signal::interactions, params.neighborhood_size);
  if (base.empty()) {
    const std::size_t neighbors = base.neighborhood_size;
    base = recommend_popular(base_k);
    base.neighborhood_size = neighbors;
  }

  double lo = 0.0;
  double hi = 0.0;
  if (!base.empty()) {
    hi = base.entries.front().score;
    lo = base.entries.back().score;
  }
  struct Blended {
    RankedEntry entry;
    double score;
  };
  std::vector<Blended> blended;
  blended.reserve(base.size());
  for (const RankedEntry& e : base.entries) {
    const double normalized = hi > lo ? (e.score - lo) / (hi - lo) : 1.0;
    const double feature = goal_feature(snapshot_.require_resource(e.resource_id), goal);
    blended.push_back(Blended{e, (1.0 - params.lambda) * normalized + params.lambda * feature});
  }
  // Stable: equal blended scores keep the base order.
  std::stable_sort(blended.begin(), blended.end(),
                   [](const Blended& a, const Blended& b) { return a.score > b.score; });

  RankedList list;
  list.algorithm_id = "uc7";
  list.neighborhood_size = base.neighborhood_size;
  const std::size_t keep = std::min(k, blended.size());
  for (std::size_t i = 0; i < keep; ++i) {
    list.entries.push_back(RankedEntry{blended[i].entry.resource_id, blended[i].score, i + 1});
  }
  return list;
}

}  // namespace learnrec::engine
