#include "stresslab/provenance.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <random>

#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"

namespace fs = std::filesystem;

namespace stresslab::provenance {

ArtifactHash hash_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read artifact " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  std::size_t newlines = 0;
  char last = '\n';
  bool any = false;
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    any = true;
    h.update(std::string_view(buf.data(), got));
    newlines += static_cast<std::size_t>(std::count(buf.data(), buf.data() + got, '\n'));
    last = buf[got - 1];
  }
  ArtifactHash out{to_hex(h.finish()), std::nullopt};
  if (path.extension() == ".csv") {
    const std::size_t lines = any ? newlines + (last == '\n' ? 0 : 1) : 0;
    out.row_count = lines > 0 ? lines - 1 : 0;  // header excluded
  }
  return out;
}

std::string new_run_id() {
  std::random_device rd;
  std::array<std::uint8_t, 16> b;
  for (auto& x : b) x = static_cast<std::uint8_t>(rd());
  b[6] = static_cast<std::uint8_t>((b[6] & 0x0F) | 0x40);
  b[8] = static_cast<std::uint8_t>((b[8] & 0x3F) | 0x80);
  std::string hex = to_hex(b);
  return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" + hex.substr(16, 4) + "-" +
         hex.substr(20);
}

std::vector<ArtifactEntry> scan_artifacts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingArtifactError("run directory " + dir.string() + " does not exist");
  std::vector<ArtifactEntry> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (e.path().filename() == kManifestName) continue;
    auto h = hash_artifact(e.path());
    out.push_back({fs::relative(e.path(), dir).generic_string(), h.sha256, h.row_count});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

Json to_json(const RunManifest& m) {
  Json entries = Json::array();
  for (const auto& e : m.entries) {
    Json j{{"path", e.path}, {"sha256", e.sha256}};
    j["row_count"] = e.row_count ? Json(*e.row_count) : Json(nullptr);
    entries.push_back(std::move(j));
  }
  return Json{{"stable",
               {{"workspace_tag", m.workspace_tag},
                {"model_config", m.model_config},
                {"flags", {{"rag", m.rag}, {"use_news", m.use_news}}},
                {"entries", entries},
                {"metadata", m.metadata}}},
              {"volatile", {{"run_id", m.run_id}, {"started_utc", m.started_utc}, {"finished_utc", m.finished_utc}}}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  try {
    const auto& s = j.at("stable");
    m.workspace_tag = s.at("workspace_tag").get<std::string>();
    m.model_config = s.at("model_config");
    m.rag = s.at("flags").at("rag").get<bool>();
    m.use_news = s.at("flags").at("use_news").get<bool>();
    for (const auto& e : s.at("entries")) {
      ArtifactEntry a{e.at("path").get<std::string>(), e.at("sha256").get<std::string>(), std::nullopt};
      if (!e.at("row_count").is_null()) a.row_count = e.at("row_count").get<std::size_t>();
      m.entries.push_back(std::move(a));
    }
    m.metadata = s.at("metadata");
    const auto& v = j.at("volatile");
    m.run_id = v.at("run_id").get<std::string>();
    m.started_utc = v.at("started_utc").get<std::string>();
    m.finished_utc = v.at("finished_utc").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string serialize(const RunManifest& m) { return canonical_dump(to_json(m)) + "\n"; }

std::string stable_section(const RunManifest& m) { return canonical_dump(to_json(m).at("stable")); }

void write_manifest(const RunManifest& m, const fs::path& dir) {
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw MissingArtifactError("cannot write manifest in " + dir.string());
  out << serialize(m);
}

RunManifest read_manifest(const fs::path& p) {
  const fs::path file = fs::is_directory(p) ? p / kManifestName : p;
  std::ifstream in(file);
  if (!in) throw MissingArtifactError("missing manifest " + file.string());
  try {
    return manifest_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

ReplayReport verify_replay(const RunManifest& a, const RunManifest& b) {
  std::map<std::string, const ArtifactEntry*> ea, eb;
  for (const auto& e : a.entries) ea[e.path] = &e;
  for (const auto& e : b.entries) eb[e.path] = &e;
  std::vector<std::string> missing;
  for (const auto& [p, e] : ea) {
    if (!eb.count(p)) missing.push_back(p + " (only in first)");
  }
  for (const auto& [p, e] : eb) {
    if (!ea.count(p)) missing.push_back(p + " (only in second)");
  }
  if (!missing.empty()) {
    std::string msg = "manifests list different artifacts:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ReplayStructureError(msg);
  }
  ReplayReport r;
  for (const auto& [p, e] : ea) {
    const auto* o = eb.at(p);
    (e->sha256 == o->sha256 && e->row_count == o->row_count ? r.matching : r.mismatching).push_back(p);
  }
  for (const auto& [k, v] : a.metadata.items()) {
    const std::string key = "metadata." + k;
    (b.metadata.contains(k) && b.metadata.at(k) == v ? r.matching : r.mismatching).push_back(key);
  }
  for (const auto& [k, v] : b.metadata.items()) {
    if (!a.metadata.contains(k)) r.mismatching.push_back("metadata." + k);
  }
  return r;
}

}  // namespace stresslab::provenance
