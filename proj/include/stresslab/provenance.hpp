#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stresslab/core.hpp"
#include "stresslab/error.hpp"

namespace stresslab::provenance {

inline constexpr const char* kManifestName = "run_artifacts_index.json";

struct ArtifactHash {
  std::string sha256;
  std::optional<std::size_t> row_count;  // data rows for .csv, otherwise empty
};

/// Streaming SHA-256. Throws MissingArtifactError if the file cannot be read.
ArtifactHash hash_artifact(const std::filesystem::path& path);

struct ArtifactEntry {
  std::string path;  // relative to the run directory, '/' separated
  std::string sha256;
  std::optional<std::size_t> row_count;
  bool operator==(const ArtifactEntry&) const = default;
};

struct RunManifest {
  // stable section
  std::string workspace_tag;
  Json model_config = Json::object();
  bool rag = false;
  bool use_news = false;
  std::vector<ArtifactEntry> entries;  // sorted by path
  Json metadata = Json::object();      // global hashes (weo_hash, prices_hash, ...)
  // volatile section
  std::string run_id;
  std::string started_utc;
  std::string finished_utc;
};

/// Random RFC 4122 version-4 identifier.
std::string new_run_id();

/// Hashes every regular file under `dir` except the manifest itself.
std::vector<ArtifactEntry> scan_artifacts(const std::filesystem::path& dir);

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);
/// Canonical JSON with "stable" and "volatile" sections.
std::string serialize(const RunManifest& m);
std::string stable_section(const RunManifest& m);

void write_manifest(const RunManifest& m, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& dir_or_file);

class ReplayStructureError : public Error {
 public:
  using Error::Error;
};

struct ReplayReport {
  std::vector<std::string> matching;
  std::vector<std::string> mismatching;  // entry paths or "metadata.<key>"
  bool all_match() const { return mismatching.empty(); }
};

/// Compares digests entry by entry plus the metadata record; the volatile section is
/// ignored. Throws ReplayStructureError listing paths present in only one manifest.
ReplayReport verify_replay(const RunManifest& a, const RunManifest& b);

}  // namespace stresslab::provenance
