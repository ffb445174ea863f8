#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "learnrec/types.hpp"

namespace learnrec::io {

inline constexpr std::string_view kInteractionsHeader = "user_id,resource_id,timestamp_ms,kind";
inline constexpr std::string_view kTagsHeader = "user_id,resource_id,tag,timestamp_ms";

inline constexpr std::string_view kInteractionsFile = "interactions.csv";
inline constexpr std::string_view kResourcesFile = "resources.jsonl";
inline constexpr std::string_view kTagsFile = "tags.csv";
inline constexpr std::string_view kManifestFile = "manifest.json";

struct RecordError {
  std::size_t line = 0;  // 1-based, header included
  std::string reason;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::vector<RecordError> errors;
};

// Parsers accept partial input: bad records are itemized in `errors` and the
// rest are returned. A missing or wrong CSV header throws ValidationError.
ParseResult<Interaction> parse_interactions_csv(std::string_view text);
ParseResult<Resource> parse_resources_jsonl(std::string_view text);
ParseResult<TagAssignment> parse_tags_csv(std::string_view text);

std::string format_interactions_csv(std::span<const Interaction> interactions);
std::string format_resources_jsonl(std::span<const Resource> resources);
std::string format_tags_csv(std::span<const TagAssignment> tags);

/// Splits one CSV line into fields, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct DatasetPaths {
  std::optional<std::filesystem::path> interactions;
  std::optional<std::filesystem::path> resources;
  std::optional<std::filesystem::path> tags;
};

/// Reads whichever files are given. Throws IoError for unreadable files and
/// ValidationError when any record fails to parse.
Dataset read_dataset(const DatasetPaths& paths);

/// Counts recorded next to a persisted dataset.
struct Manifest {
  DatasetStats stats;
  std::size_t interaction_records = 0;
  std::size_t resource_records = 0;
  std::size_t tag_records = 0;
};

/// Writes the three ingestion files plus manifest.json into `dir`.
void write_snapshot(const std::filesystem::path& dir, const Dataset& dataset, const DatasetStats& stats);
Manifest read_manifest(const std::filesystem::path& dir);
Dataset read_snapshot(const std::filesystem::path& dir);

}  // namespace learnrec::io
