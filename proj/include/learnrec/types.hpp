#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace learnrec {

/// Interaction vocabulary. Only clicks are observed in practice; new kinds
/// are appended here and to the parser.
enum class InteractionKind : std::uint8_t { click };

std::string_view to_string(InteractionKind kind);
InteractionKind parse_interaction_kind(std::string_view name);

struct Interaction {
  std::string user_id;
  std::string resource_id;
  std::int64_t timestamp_ms = 0;
  InteractionKind kind = InteractionKind::click;
};

struct Resource {
  std::string resource_id;
  std::string title;
  std::string description;
  std::vector<std::string> categories;
};

struct TagAssignment {
  std::string user_id;
  std::string resource_id;
  std::string tag;
  std::int64_t timestamp_ms = 0;
};

struct DatasetStats {
  std::uint64_t n_interactions = 0;
  std::uint64_t n_users = 0;
  std::uint64_t n_resources = 0;
  std::uint64_t n_tag_assignments = 0;
  double avg_interactions_per_user = 0.0;
  double avg_interactions_per_resource = 0.0;
  double avg_tags_per_resource = 0.0;

  /// Fills the averages from the counters; zero denominators give 0.
  static DatasetStats from_counts(std::uint64_t interactions, std::uint64_t users, std::uint64_t resources,
                                  std::uint64_t tag_assignments);

  bool operator==(const DatasetStats&) const = default;
};

/// Raw records in ingestion order, as read from or written to the file formats.
struct Dataset {
  std::vector<Interaction> interactions;
  std::vector<Resource> resources;
  std::vector<TagAssignment> tags;
};

// Validation helpers shared by the store and the file readers. Each throws
// ValidationError with a short reason.
void validate_id(std::string_view id, std::string_view field);
void validate(const Interaction& interaction);
void validate(const Resource& resource);

/// Lowercased, trimmed tag; throws ValidationError when nothing is left.
std::string normalize_tag(std::string_view tag);

}  // namespace learnrec
