#include "learnrec/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "learnrec/error.hpp"
#include "learnrec/text.hpp"

namespace learnrec::io {
namespace {

using json = nlohmann::json;

// Iterates lines, stripping a trailing '\r' and a leading UTF-8 BOM.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.ends_with('\r')) line.remove_suffix(1);
    fn(++line_no, line);
  }
}

std::int64_t parse_timestamp(std::string_view field) {
  field = text::trim(field);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ValidationError("timestamp '" + std::string(field) + "' is not an integer");
  }
  if (value < 0) throw ValidationError("timestamp is negative");
  return value;
}

void check_header(std::string_view line, std::string_view expected) {
  std::string normalized;
  for (const std::string& field : split_csv_line(line)) {
    if (!normalized.empty()) normalized.push_back(',');
    normalized += text::to_lower(text::trim(field));
  }
  if (normalized != expected) {
    throw ValidationError("expected header '" + std::string(expected) + "', got '" + std::string(line) + "'");
  }
}

template <typename T, typename RowFn>
ParseResult<T> parse_csv(std::string_view text, std::string_view header, std::size_t columns, RowFn&& row) {
  ParseResult<T> result;
  bool saw_header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (!saw_header) {
      check_header(line, header);
      saw_header = true;
      return;
    }
    if (text::trim(line).empty()) return;
    try {
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() != columns) {
        throw ValidationError("expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
      }
      result.records.push_back(row(fields));
    } catch (const ValidationError& e) {
      result.errors.push_back(RecordError{line_no, e.what()});
    }
  });
  if (!saw_header) throw ValidationError("missing header row '" + std::string(header) + "'");
  return result;
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string string_field(const json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ValidationError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

ParseResult<Interaction> parse_interactions_csv(std::string_view text) {
  return parse_csv<Interaction>(text, kInteractionsHeader, 4, [](const std::vector<std::string>& f) {
    Interaction i{std::string(text::trim(f[0])), std::string(text::trim(f[1])), parse_timestamp(f[2]),
                  parse_interaction_kind(f[3])};
    validate(i);
    return i;
  });
}

ParseResult<TagAssignment> parse_tags_csv(std::string_view text) {
  return parse_csv<TagAssignment>(text, kTagsHeader, 4, [](const std::vector<std::string>& f) {
    TagAssignment t{std::string(text::trim(f[0])), std::string(text::trim(f[1])), normalize_tag(f[2]),
                    parse_timestamp(f[3])};
    validate_id(t.user_id, "user_id");
    validate_id(t.resource_id, "resource_id");
    return t;
  });
}

ParseResult<Resource> parse_resources_jsonl(std::string_view text) {
  ParseResult<Resource> result;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded()) throw ValidationError("invalid JSON");
      if (!obj.is_object()) throw ValidationError("record is not a JSON object");
      Resource r;
      r.resource_id = string_field(obj, "resource_id", true);
      r.title = string_field(obj, "title", false);
      r.description = string_field(obj, "description", false);
      if (auto it = obj.find("categories"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field 'categories' is not an array");
        for (const json& c : *it) {
          if (!c.is_string()) throw ValidationError("category is not a string");
          r.categories.push_back(c.get<std::string>());
        }
      }
      validate(r);
      result.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      result.errors.push_back(RecordError{line_no, e.what()});
    }
  });
  return result;
}

std::string format_interactions_csv(std::span<const Interaction> interactions) {
  std::string out(kInteractionsHeader);
  out.push_back('\n');
  for (const Interaction& i : interactions) {
    out += csv_field(i.user_id) + ',' + csv_field(i.resource_id) + ',' + std::to_string(i.timestamp_ms) + ',' +
           std::string(to_string(i.kind)) + '\n';
  }
  return out;
}

std::string format_tags_csv(std::span<const TagAssignment> tags) {
  std::string out(kTagsHeader);
  out.push_back('\n');
  for (const TagAssignment& t : tags) {
    out += csv_field(t.user_id) + ',' + csv_field(t.resource_id) + ',' + csv_field(t.tag) + ',' +
           std::to_string(t.timestamp_ms) + '\n';
  }
  return out;
}

std::string format_resources_jsonl(std::span<const Resource> resources) {
  std::string out;
  for (const Resource& r : resources) {
    json obj = {{"resource_id", r.resource_id},
                {"title", r.title},
                {"description", r.description},
                {"categories", r.categories}};
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

template <typename T>
std::vector<T> take_or_throw(ParseResult<T> result, const std::filesystem::path& path) {
  if (!result.errors.empty()) {
    const RecordError& first = result.errors.front();
    throw ValidationError(path.string() + ":" + std::to_string(first.line) + ": " + first.reason + " (" +
                          std::to_string(result.errors.size()) + " bad record(s))");
  }
  return std::move(result.records);
}

template <typename Parse>
auto parse_file(const std::filesystem::path& path, Parse&& parse) {
  const std::string contents = read_file(path);
  try {
    return take_or_throw(parse(contents), path);
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw ValidationError(path.string() + ": " + what);
  }
}

}  // namespace

Dataset read_dataset(const DatasetPaths& paths) {
  Dataset dataset;
  if (paths.interactions) dataset.interactions = parse_file(*paths.interactions, parse_interactions_csv);
  if (paths.resources) dataset.resources = parse_file(*paths.resources, parse_resources_jsonl);
  if (paths.tags) dataset.tags = parse_file(*paths.tags, parse_tags_csv);
  return dataset;
}

void write_snapshot(const std::filesystem::path& dir, const Dataset& dataset, const DatasetStats& stats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / kInteractionsFile, format_interactions_csv(dataset.interactions));
  write_file(dir / kResourcesFile, format_resources_jsonl(dataset.resources));
  write_file(dir / kTagsFile, format_tags_csv(dataset.tags));
  const json manifest = {
      {"files",
       {{"interactions", kInteractionsFile}, {"resources", kResourcesFile}, {"tags", kTagsFile}}},
      {"records",
       {{"interactions", dataset.interactions.size()},
        {"resources", dataset.resources.size()},
        {"tags", dataset.tags.size()}}},
      {"stats",
       {{"n_interactions", stats.n_interactions},
        {"n_users", stats.n_users},
        {"n_resources", stats.n_resources},
        {"n_tag_assignments", stats.n_tag_assignments}}},
  };
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& dir) {
  const std::string contents = read_file(dir / kManifestFile);
  const json doc = json::parse(contents, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ValidationError("manifest.json is not a JSON object");
  try {
    Manifest m;
    const json& s = doc.at("stats");
    m.stats = DatasetStats::from_counts(s.at("n_interactions").get<std::uint64_t>(), s.at("n_users").get<std::uint64_t>(),
                                        s.at("n_resources").get<std::uint64_t>(),
                                        s.at("n_tag_assignments").get<std::uint64_t>());
    const json& r = doc.at("records");
    m.interaction_records = r.at("interactions").get<std::size_t>();
    m.resource_records = r.at("resources").get<std::size_t>();
    m.tag_records = r.at("tags").get<std::size_t>();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest.json: ") + e.what());
  }
}

Dataset read_snapshot(const std::filesystem::path& dir) {
  return read_dataset(DatasetPaths{dir / kInteractionsFile, dir / kResourcesFile, dir / kTagsFile});
}

}  // namespace learnrec::io
