#include "learnrec/store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "learnrec/error.hpp"
#include "learnrec/text.hpp"

namespace learnrec::store {
namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

template <typename Index>
using Lookup = std::unordered_map<std::string, Index, StringHash, std::equal_to<>>;

struct TermCount {
  TermIndex term = 0;
  std::uint32_t count = 0;
};

struct UserRecord {
  std::vector<HistoryEntry> history;  // insertion order
  std::vector<ResourceIndex> items;   // sorted, distinct
  std::vector<TagCount> tags;         // sorted by tag
  double tag_norm = 0.0;
};

struct ResourceRecord {
  std::optional<Resource> meta;
  std::uint64_t popularity = 0;
  std::vector<UserIndex> users;  // sorted, distinct
  std::vector<TermCount> terms;  // sorted by term
  std::vector<TagCount> tags;    // sorted by tag
};

struct AssignmentKey {
  UserIndex user;
  ResourceIndex resource;
  TagIndex tag;
  bool operator==(const AssignmentKey&) const = default;
};

struct AssignmentKeyHash {
  std::size_t operator()(const AssignmentKey& k) const {
    std::uint64_t h = k.user;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.resource;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.tag;
    return std::hash<std::uint64_t>{}(h);
  }
};

struct AssignmentEntry {
  std::uint32_t count = 0;
  std::int64_t timestamp_ms = 0;
};

struct StoreData {
  std::uint64_t version = 0;
  std::uint64_t next_sequence = 0;
  std::uint64_t n_interactions = 0;

  std::vector<std::string> user_names;
  Lookup<UserIndex> user_lookup;
  std::vector<UserRecord> users;

  std::vector<std::string> resource_names;
  Lookup<ResourceIndex> resource_lookup;
  std::vector<ResourceRecord> resources;
  std::size_t documents = 0;  // resources carrying metadata

  std::vector<std::string> tag_names;
  Lookup<TagIndex> tag_lookup;
  std::vector<std::vector<UserTagCount>> tag_users;  // sorted by user

  std::vector<std::string> term_names;
  Lookup<TermIndex> term_lookup;
  std::vector<std::vector<ResourceIndex>> postings;  // sorted

  std::unordered_map<AssignmentKey, AssignmentEntry, AssignmentKeyHash> assignments;
  std::vector<AssignmentKey> assignment_order;
};

struct TextModel {
  std::size_t documents = 0;
  std::vector<double> idf;            // by term
  std::vector<TermVector> vectors;    // by resource at build time
  std::vector<double> raw_complexity; // by resource at build time
  std::vector<double> complexity;
};

namespace {

template <typename Index>
Index intern(std::string_view name, std::vector<std::string>& names, Lookup<Index>& lookup, bool& created) {
  if (auto it = lookup.find(name); it != lookup.end()) {
    created = false;
    return it->second;
  }
  const auto index = static_cast<Index>(names.size());
  names.emplace_back(name);
  lookup.emplace(std::string(name), index);
  created = true;
  return index;
}

template <typename T>
void insert_sorted_unique(std::vector<T>& v, T value) {
  auto it = std::lower_bound(v.begin(), v.end(), value);
  if (it == v.end() || *it != value) v.insert(it, value);
}

template <typename Entry, typename Key, typename Proj>
Entry& find_or_insert(std::vector<Entry>& v, Key key, Proj proj) {
  auto it = std::lower_bound(v.begin(), v.end(), key, [&](const Entry& e, Key k) { return proj(e) < k; });
  if (it == v.end() || proj(*it) != key) {
    Entry e{};
    proj(e) = key;
    it = v.insert(it, e);
  }
  return *it;
}

double idf_weight(std::size_t documents, std::size_t df) {
  return std::log((1.0 + static_cast<double>(documents)) / (1.0 + static_cast<double>(df))) + 1.0;
}

void finish_norm(TermVector& v) {
  double sum = 0.0;
  for (const auto& [term, w] : v.weights) sum += w * w;
  v.norm = std::sqrt(sum);
}

std::shared_ptr<const TextModel> build_text_model(const StoreData& data) {
  auto model = std::make_shared<TextModel>();
  model->documents = data.documents;
  model->idf.resize(data.term_names.size());
  for (std::size_t t = 0; t < data.postings.size(); ++t) {
    model->idf[t] = idf_weight(data.documents, data.postings[t].size());
  }
  const std::size_t n = data.resources.size();
  model->vectors.resize(n);
  model->raw_complexity.assign(n, 0.0);
  model->complexity.assign(n, 0.0);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    const ResourceRecord& rec = data.resources[r];
    TermVector& vec = model->vectors[r];
    vec.weights.reserve(rec.terms.size());
    for (const TermCount& tc : rec.terms) {
      vec.weights.emplace_back(tc.term, static_cast<double>(tc.count) * model->idf[tc.term]);
    }
    finish_norm(vec);
    if (rec.meta && !rec.meta->description.empty()) {
      const double raw = text::raw_complexity(rec.meta->description);
      model->raw_complexity[r] = raw;
      if (raw > 0.0) {
        lo = std::min(lo, raw);
        hi = std::max(hi, raw);
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    const double raw = model->raw_complexity[r];
    if (raw <= 0.0) continue;
    model->complexity[r] = hi > lo ? (raw - lo) / (hi - lo) : 1.0;
  }
  return model;
}

const TermVector kEmptyVector{};

}  // namespace
}  // namespace detail

using detail::ResourceRecord;
using detail::StoreData;
using detail::TextModel;
using detail::UserRecord;

double TermVector::dot(const TermVector& other) const {
  double sum = 0.0;
  auto a = weights.begin();
  auto b = other.weights.begin();
  while (a != weights.end() && b != other.weights.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

double TermVector::cosine(const TermVector& other) const {
  if (empty() || other.empty() || norm <= 0.0 || other.norm <= 0.0) return 0.0;
  return std::clamp(dot(other) / (norm * other.norm), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// StoreSnapshot

StoreSnapshot::StoreSnapshot(std::shared_ptr<const StoreData> data, std::shared_ptr<const TextModel> text)
    : data_(std::move(data)), text_(std::move(text)) {}

std::uint64_t StoreSnapshot::version() const { return data_->version; }
std::size_t StoreSnapshot::user_count() const { return data_->users.size(); }
std::size_t StoreSnapshot::resource_count() const { return data_->resources.size(); }
std::size_t StoreSnapshot::tag_count() const { return data_->tag_names.size(); }
std::size_t StoreSnapshot::document_count() const { return text_->documents; }

std::optional<UserIndex> StoreSnapshot::find_user(std::string_view user_id) const {
  auto it = data_->user_lookup.find(user_id);
  if (it == data_->user_lookup.end()) return std::nullopt;
  return it->second;
}

std::optional<ResourceIndex> StoreSnapshot::find_resource(std::string_view resource_id) const {
  auto it = data_->resource_lookup.find(resource_id);
  if (it == data_->resource_lookup.end()) return std::nullopt;
  return it->second;
}

std::optional<TagIndex> StoreSnapshot::find_tag(std::string_view tag) const {
  auto it = data_->tag_lookup.find(tag);
  if (it == data_->tag_lookup.end()) return std::nullopt;
  return it->second;
}

ResourceIndex StoreSnapshot::require_resource(std::string_view resource_id) const {
  if (auto r = find_resource(resource_id)) return *r;
  throw NotFoundError("unknown resource '" + std::string(resource_id) + "'");
}

const std::string& StoreSnapshot::user_id(UserIndex user) const { return data_->user_names.at(user); }
const std::string& StoreSnapshot::resource_id(ResourceIndex resource) const {
  return data_->resource_names.at(resource);
}
const std::string& StoreSnapshot::tag_name(TagIndex tag) const { return data_->tag_names.at(tag); }

const Resource* StoreSnapshot::resource(std::string_view resource_id) const {
  auto r = find_resource(resource_id);
  return r ? resource(*r) : nullptr;
}

const Resource* StoreSnapshot::resource(ResourceIndex resource) const {
  const auto& meta = data_->resources.at(resource).meta;
  return meta ? &*meta : nullptr;
}

std::vector<Interaction> StoreSnapshot::user_history(std::string_view user_id) const {
  auto u = find_user(user_id);
  if (!u) return {};
  std::vector<HistoryEntry> entries(data_->users[*u].history);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const HistoryEntry& a, const HistoryEntry& b) { return a.timestamp_ms < b.timestamp_ms; });
  std::vector<Interaction> out;
  out.reserve(entries.size());
  for (const HistoryEntry& e : entries) {
    out.push_back(Interaction{std::string(user_id), data_->resource_names[e.resource], e.timestamp_ms, e.kind});
  }
  return out;
}

std::span<const HistoryEntry> StoreSnapshot::history(UserIndex user) const { return data_->users.at(user).history; }
std::span<const ResourceIndex> StoreSnapshot::user_items(UserIndex user) const { return data_->users.at(user).items; }
std::span<const UserIndex> StoreSnapshot::resource_users(ResourceIndex resource) const {
  return data_->resources.at(resource).users;
}
std::uint64_t StoreSnapshot::popularity(ResourceIndex resource) const {
  return data_->resources.at(resource).popularity;
}
std::uint64_t StoreSnapshot::interaction_count(UserIndex user) const { return data_->users.at(user).history.size(); }
std::span<const TagCount> StoreSnapshot::user_tags(UserIndex user) const { return data_->users.at(user).tags; }
double StoreSnapshot::user_tag_norm(UserIndex user) const { return data_->users.at(user).tag_norm; }
std::span<const UserTagCount> StoreSnapshot::tag_users(TagIndex tag) const { return data_->tag_users.at(tag); }
std::span<const TagCount> StoreSnapshot::resource_tags(ResourceIndex resource) const {
  return data_->resources.at(resource).tags;
}

std::uint32_t StoreSnapshot::assignment_count(std::string_view user_id, std::string_view resource_id,
                                              std::string_view tag) const {
  auto u = find_user(user_id);
  auto r = find_resource(resource_id);
  auto t = find_tag(text::to_lower(text::trim(tag)));
  if (!u || !r || !t) return 0;
  auto it = data_->assignments.find(detail::AssignmentKey{*u, *r, *t});
  return it == data_->assignments.end() ? 0 : it->second.count;
}

std::span<const ResourceIndex> StoreSnapshot::postings(std::string_view term) const {
  auto it = data_->term_lookup.find(term);
  if (it == data_->term_lookup.end()) return {};
  return data_->postings[it->second];
}

const TermVector& StoreSnapshot::term_vector(ResourceIndex resource) const {
  if (resource >= text_->vectors.size()) return detail::kEmptyVector;
  return text_->vectors[resource];
}

TermVector StoreSnapshot::query_vector(std::string_view text) const {
  // Terms absent from the corpus cannot match any document and are left out.
  std::map<TermIndex, std::uint32_t> counts;
  for (const std::string& token : text::tokenize(text)) {
    auto it = data_->term_lookup.find(token);
    if (it == data_->term_lookup.end() || it->second >= text_->idf.size()) continue;
    ++counts[it->second];
  }
  TermVector vec;
  for (const auto& [term, count] : counts) {
    vec.weights.emplace_back(term, static_cast<double>(count) * text_->idf[term]);
  }
  detail::finish_norm(vec);
  return vec;
}

double StoreSnapshot::text_similarity(std::string_view a, std::string_view b) const {
  const ResourceIndex ra = require_resource(a);
  const ResourceIndex rb = require_resource(b);
  return term_vector(ra).cosine(term_vector(rb));
}

double StoreSnapshot::complexity(ResourceIndex resource) const {
  if (resource >= data_->resources.size()) throw NotFoundError("unknown resource index");
  return resource < text_->complexity.size() ? text_->complexity[resource] : 0.0;
}

double StoreSnapshot::raw_complexity(ResourceIndex resource) const {
  if (resource >= data_->resources.size()) throw NotFoundError("unknown resource index");
  return resource < text_->raw_complexity.size() ? text_->raw_complexity[resource] : 0.0;
}

DatasetStats StoreSnapshot::stats() const {
  return DatasetStats::from_counts(data_->n_interactions, data_->users.size(), data_->resources.size(),
                                   data_->assignments.size());
}

Dataset StoreSnapshot::export_dataset() const {
  Dataset out;
  std::vector<std::pair<std::uint64_t, Interaction>> ordered;
  ordered.reserve(data_->n_interactions);
  for (UserIndex u = 0; u < data_->users.size(); ++u) {
    for (const HistoryEntry& e : data_->users[u].history) {
      ordered.emplace_back(e.sequence,
                           Interaction{data_->user_names[u], data_->resource_names[e.resource], e.timestamp_ms, e.kind});
    }
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.interactions.reserve(ordered.size());
  for (auto& [seq, interaction] : ordered) out.interactions.push_back(std::move(interaction));

  for (const ResourceRecord& rec : data_->resources) {
    if (rec.meta) out.resources.push_back(*rec.meta);
  }
  for (const detail::AssignmentKey& key : data_->assignment_order) {
    const detail::AssignmentEntry& entry = data_->assignments.at(key);
    for (std::uint32_t i = 0; i < entry.count; ++i) {
      out.tags.push_back(TagAssignment{data_->user_names[key.user], data_->resource_names[key.resource],
                                       data_->tag_names[key.tag], entry.timestamp_ms});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Store

namespace {
std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

Store::Store(StoreOptions options)
    : options_(options), data_(std::make_shared<StoreData>()), text_(detail::build_text_model(*data_)) {
  std::lock_guard lock(write_mu_);
  publish_locked();
}

Store::~Store() = default;

StoreData& Store::mutable_data() {
  if (data_shared_) {
    data_ = std::make_shared<StoreData>(*data_);
    data_shared_ = false;
  }
  return *data_;
}

void Store::note_write() {
  ++data_->version;
  if (!pending_.load(std::memory_order_relaxed)) {
    pending_since_ns_.store(now_ns(), std::memory_order_relaxed);
    pending_.store(true, std::memory_order_release);
  }
}

StoreSnapshot Store::publish_locked() const {
  if (text_dirty_) {
    text_ = detail::build_text_model(*data_);
    text_dirty_ = false;
  }
  data_shared_ = true;
  auto snap = std::make_shared<const StoreSnapshot>(data_, text_);
  std::atomic_store(&published_, snap);
  pending_.store(false, std::memory_order_release);
  return *snap;
}

void Store::apply_interaction(const Interaction& interaction) {
  validate(interaction);
  StoreData& d = mutable_data();
  bool created = false;
  const UserIndex u = detail::intern(interaction.user_id, d.user_names, d.user_lookup, created);
  if (created) d.users.emplace_back();
  const ResourceIndex r = detail::intern(interaction.resource_id, d.resource_names, d.resource_lookup, created);
  if (created) d.resources.emplace_back();

  UserRecord& user = d.users[u];
  user.history.push_back(HistoryEntry{r, interaction.timestamp_ms, d.next_sequence++, interaction.kind});
  detail::insert_sorted_unique(user.items, r);
  ResourceRecord& res = d.resources[r];
  detail::insert_sorted_unique(res.users, u);
  ++res.popularity;
  ++d.n_interactions;
}

void Store::apply_resource(const Resource& resource) {
  validate(resource);
  StoreData& d = mutable_data();
  bool created = false;
  const ResourceIndex r = detail::intern(resource.resource_id, d.resource_names, d.resource_lookup, created);
  if (created) d.resources.emplace_back();
  ResourceRecord& rec = d.resources[r];

  for (const detail::TermCount& tc : rec.terms) {
    auto& list = d.postings[tc.term];
    auto it = std::lower_bound(list.begin(), list.end(), r);
    if (it != list.end() && *it == r) list.erase(it);
  }
  rec.terms.clear();
  if (!rec.meta) ++d.documents;

  Resource meta = resource;
  std::sort(meta.categories.begin(), meta.categories.end());
  meta.categories.erase(std::unique(meta.categories.begin(), meta.categories.end()), meta.categories.end());

  std::map<TermIndex, std::uint32_t> counts;
  const auto add_text = [&](std::string_view s) {
    for (const std::string& token : text::tokenize(s)) {
      bool term_created = false;
      const TermIndex t = detail::intern(token, d.term_names, d.term_lookup, term_created);
      if (term_created) d.postings.emplace_back();
      ++counts[t];
    }
  };
  add_text(meta.title);
  add_text(meta.description);
  for (const std::string& category : meta.categories) add_text(category);

  for (const auto& [term, count] : counts) {
    rec.terms.push_back(detail::TermCount{term, count});
    detail::insert_sorted_unique(d.postings[term], r);
  }
  rec.meta = std::move(meta);
  text_dirty_ = true;
}

void Store::apply_tag(const TagAssignment& assignment) {
  validate_id(assignment.user_id, "user_id");
  validate_id(assignment.resource_id, "resource_id");
  if (assignment.timestamp_ms < 0) throw ValidationError("timestamp is negative");
  const std::string tag = normalize_tag(assignment.tag);

  StoreData& d = mutable_data();
  bool created = false;
  const UserIndex u = detail::intern(assignment.user_id, d.user_names, d.user_lookup, created);
  if (created) d.users.emplace_back();
  const ResourceIndex r = detail::intern(assignment.resource_id, d.resource_names, d.resource_lookup, created);
  if (created) d.resources.emplace_back();
  const TagIndex t = detail::intern(tag, d.tag_names, d.tag_lookup, created);
  if (created) d.tag_users.emplace_back();

  const detail::AssignmentKey key{u, r, t};
  auto [it, inserted] = d.assignments.try_emplace(key, detail::AssignmentEntry{0, assignment.timestamp_ms});
  ++it->second.count;
  it->second.timestamp_ms = std::min(it->second.timestamp_ms, assignment.timestamp_ms);
  if (!inserted) return;

  d.assignment_order.push_back(key);
  UserRecord& user = d.users[u];
  ++detail::find_or_insert(user.tags, t, [](auto& e) -> auto& { return e.tag; }).count;
  double sum = 0.0;
  for (const TagCount& tc : user.tags) sum += static_cast<double>(tc.count) * tc.count;
  user.tag_norm = std::sqrt(sum);
  ++detail::find_or_insert(d.tag_users[t], u, [](auto& e) -> auto& { return e.user; }).count;
  ++detail::find_or_insert(d.resources[r].tags, t, [](auto& e) -> auto& { return e.tag; }).count;
}

std::uint64_t Store::add_interaction(const Interaction& interaction) {
  std::lock_guard lock(write_mu_);
  apply_interaction(interaction);
  note_write();
  return data_->version;
}

std::uint64_t Store::add_resource(const Resource& resource) {
  std::lock_guard lock(write_mu_);
  apply_resource(resource);
  note_write();
  return data_->version;
}

std::uint64_t Store::add_tag_assignment(const TagAssignment& assignment) {
  std::lock_guard lock(write_mu_);
  apply_tag(assignment);
  note_write();
  return data_->version;
}

std::size_t Store::ingest(const Dataset& dataset) {
  std::lock_guard lock(write_mu_);
  std::size_t rejected = 0;
  const auto attempt = [&](auto&& apply) {
    try {
      apply();
      note_write();
    } catch (const ValidationError&) {
      ++rejected;
    }
  };
  for (const Resource& r : dataset.resources) attempt([&] { apply_resource(r); });
  for (const Interaction& i : dataset.interactions) attempt([&] { apply_interaction(i); });
  for (const TagAssignment& t : dataset.tags) attempt([&] { apply_tag(t); });
  return rejected;
}

StoreSnapshot Store::snapshot() const {
  if (pending_.load(std::memory_order_acquire)) {
    const auto waited = std::chrono::nanoseconds(now_ns() - pending_since_ns_.load(std::memory_order_relaxed));
    if (waited >= options_.refresh_bound) {
      std::lock_guard lock(write_mu_);
      if (pending_.load(std::memory_order_relaxed)) return publish_locked();
    }
  }
  return *std::atomic_load(&published_);
}

StoreSnapshot Store::refresh() {
  std::lock_guard lock(write_mu_);
  return publish_locked();
}

bool Store::maybe_refresh() {
  if (!pending_.load(std::memory_order_acquire)) return false;
  const auto waited = std::chrono::nanoseconds(now_ns() - pending_since_ns_.load(std::memory_order_relaxed));
  if (waited < options_.refresh_bound / 2) return false;
  std::lock_guard lock(write_mu_);
  if (!pending_.load(std::memory_order_relaxed)) return false;
  publish_locked();
  return true;
}

std::uint64_t Store::write_version() const {
  std::lock_guard lock(write_mu_);
  return data_->version;
}

std::vector<Interaction> Store::get_user_history(std::string_view user_id) const {
  return snapshot().user_history(user_id);
}

double Store::text_similarity(std::string_view a, std::string_view b) const {
  return snapshot().text_similarity(a, b);
}

DatasetStats Store::compute_stats() const { return snapshot().stats(); }

}  // namespace learnrec::store
