#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "learnrec/types.hpp"

namespace learnrec::store {

using UserIndex = std::uint32_t;
using ResourceIndex = std::uint32_t;
using TagIndex = std::uint32_t;
using TermIndex = std::uint32_t;

/// Sparse TF-IDF vector, entries sorted by term. `norm` is the Euclidean norm
/// of `weights`, computed once when the vector is built.
struct TermVector {
  std::vector<std::pair<TermIndex, double>> weights;
  double norm = 0.0;

  bool empty() const { return weights.empty(); }
  double dot(const TermVector& other) const;
  double cosine(const TermVector& other) const;
};

struct HistoryEntry {
  ResourceIndex resource = 0;
  std::int64_t timestamp_ms = 0;
  std::uint64_t sequence = 0;
  InteractionKind kind = InteractionKind::click;
};

struct TagCount {
  TagIndex tag = 0;
  std::uint32_t count = 0;
};

struct UserTagCount {
  UserIndex user = 0;
  std::uint32_t count = 0;
};

struct StoreOptions {
  /// Upper bound on how long a write may stay invisible to readers.
  /// Zero publishes on the first read after a write.
  std::chrono::milliseconds refresh_bound{0};
};

namespace detail {
struct StoreData;
struct TextModel;
}  // namespace detail

/// Immutable, consistent view of the store. Cheap to copy; stays valid and
/// unchanged while the store keeps accepting writes.
class StoreSnapshot {
 public:
  StoreSnapshot(std::shared_ptr<const detail::StoreData> data, std::shared_ptr<const detail::TextModel> text);

  /// Number of writes reflected in this snapshot.
  std::uint64_t version() const;

  std::size_t user_count() const;
  std::size_t resource_count() const;
  std::size_t tag_count() const;

  std::optional<UserIndex> find_user(std::string_view user_id) const;
  std::optional<ResourceIndex> find_resource(std::string_view resource_id) const;
  std::optional<TagIndex> find_tag(std::string_view tag) const;
  /// Throws NotFoundError.
  ResourceIndex require_resource(std::string_view resource_id) const;

  const std::string& user_id(UserIndex user) const;
  const std::string& resource_id(ResourceIndex resource) const;
  const std::string& tag_name(TagIndex tag) const;

  /// Metadata for a catalog resource; nullptr for stubs and unknown ids.
  const Resource* resource(std::string_view resource_id) const;
  const Resource* resource(ResourceIndex resource) const;

  /// Ascending by timestamp, ties in insertion order; empty for unknown users.
  std::vector<Interaction> user_history(std::string_view user_id) const;
  std::span<const HistoryEntry> history(UserIndex user) const;

  /// Distinct resources the user interacted with, sorted by index.
  std::span<const ResourceIndex> user_items(UserIndex user) const;
  /// Distinct users who interacted with the resource, sorted by index.
  std::span<const UserIndex> resource_users(ResourceIndex resource) const;
  std::uint64_t popularity(ResourceIndex resource) const;
  std::uint64_t interaction_count(UserIndex user) const;

  /// Tag-frequency vector of a user (tag -> number of distinct assignments).
  std::span<const TagCount> user_tags(UserIndex user) const;
  double user_tag_norm(UserIndex user) const;
  std::span<const UserTagCount> tag_users(TagIndex tag) const;
  std::span<const TagCount> resource_tags(ResourceIndex resource) const;
  /// Collapsed count of one (user, resource, tag) assignment; 0 when absent.
  std::uint32_t assignment_count(std::string_view user_id, std::string_view resource_id, std::string_view tag) const;

  std::span<const ResourceIndex> postings(std::string_view term) const;
  const TermVector& term_vector(ResourceIndex resource) const;
  /// TF-IDF vector of free text against the current corpus statistics.
  TermVector query_vector(std::string_view text) const;
  std::size_t document_count() const;

  /// Cosine of the two resources' TF-IDF vectors in [0, 1]. Throws NotFoundError.
  double text_similarity(std::string_view a, std::string_view b) const;
  /// Min-max normalized readability complexity in [0, 1].
  double complexity(ResourceIndex resource) const;
  double raw_complexity(ResourceIndex resource) const;

  DatasetStats stats() const;

  /// All records in a form the ingestion formats can write back. Interactions
  /// keep insertion order; collapsed tag assignments are expanded by count.
  Dataset export_dataset() const;

 private:
  std::shared_ptr<const detail::StoreData> data_;
  std::shared_ptr<const detail::TextModel> text_;
};

/// Single-writer, many-reader in-memory store with the secondary indices the
/// engine needs. Writes land immediately in a private working copy; readers
/// see published snapshots that trail writes by at most the refresh bound.
class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Each returns the store version after the write. Throws ValidationError.
  std::uint64_t add_interaction(const Interaction& interaction);
  std::uint64_t add_resource(const Resource& resource);
  std::uint64_t add_tag_assignment(const TagAssignment& assignment);

  /// Applies a whole dataset under one writer lock. Invalid records are skipped
  /// and reported through the returned count of rejected records.
  std::size_t ingest(const Dataset& dataset);

  /// Latest published snapshot. Publishes pending writes first when they have
  /// been waiting for at least the refresh bound.
  StoreSnapshot snapshot() const;
  /// Publishes pending writes unconditionally.
  StoreSnapshot refresh();
  /// Publishes when writes are pending and due; returns whether it did.
  bool maybe_refresh();

  std::chrono::milliseconds refresh_bound() const { return options_.refresh_bound; }
  std::uint64_t write_version() const;

  std::vector<Interaction> get_user_history(std::string_view user_id) const;
  double text_similarity(std::string_view a, std::string_view b) const;
  DatasetStats compute_stats() const;

 private:
  detail::StoreData& mutable_data();
  void note_write();
  StoreSnapshot publish_locked() const;
  void apply_interaction(const Interaction& interaction);
  void apply_resource(const Resource& resource);
  void apply_tag(const TagAssignment& assignment);

  StoreOptions options_;
  mutable std::mutex write_mu_;
  // Writer-side state, guarded by write_mu_.
  mutable std::shared_ptr<detail::StoreData> data_;
  mutable bool data_shared_ = false;
  mutable std::shared_ptr<const detail::TextModel> text_;
  mutable bool text_dirty_ = false;
  // Reader-side state.
  mutable std::shared_ptr<const StoreSnapshot> published_;
  mutable std::atomic<bool> pending_{false};
  mutable std::atomic<std::int64_t> pending_since_ns_{0};
};

}  // namespace learnrec::store
