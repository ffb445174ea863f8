#include "learnrec/types.hpp"

#include "learnrec/error.hpp"
#include "learnrec/text.hpp"

namespace learnrec {

std::string_view to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::click:
      return "click";
  }
  return "click";
}

InteractionKind parse_interaction_kind(std::string_view name) {
  if (text::to_lower(text::trim(name)) == "click") return InteractionKind::click;
  throw ValidationError("unknown interaction kind '" + std::string(name) + "'");
}

DatasetStats DatasetStats::from_counts(std::uint64_t interactions, std::uint64_t users, std::uint64_t resources,
                                       std::uint64_t tag_assignments) {
  DatasetStats s;
  s.n_interactions = interactions;
  s.n_users = users;
  s.n_resources = resources;
  s.n_tag_assignments = tag_assignments;
  const auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  s.avg_interactions_per_user = ratio(interactions, users);
  s.avg_interactions_per_resource = ratio(interactions, resources);
  s.avg_tags_per_resource = ratio(tag_assignments, resources);
  return s;
}

void validate_id(std::string_view id, std::string_view field) {
  if (id.empty()) throw ValidationError(std::string(field) + " is empty");
  for (const char c : id) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) {
      throw ValidationError(std::string(field) + " contains a control character");
    }
  }
}

void validate(const Interaction& interaction) {
  validate_id(interaction.user_id, "user_id");
  validate_id(interaction.resource_id, "resource_id");
  if (interaction.timestamp_ms < 0) throw ValidationError("timestamp is negative");
}

void validate(const Resource& resource) { validate_id(resource.resource_id, "resource_id"); }

std::string normalize_tag(std::string_view tag) {
  std::string normalized = text::to_lower(text::trim(tag));
  if (normalized.empty()) throw ValidationError("tag is empty after normalization");
  return normalized;
}

}  // namespace learnrec
