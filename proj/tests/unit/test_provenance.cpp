#include <gtest/gtest.h>

#include <fstream>

#include "stresslab/error.hpp"
#include "stresslab/provenance.hpp"
#include "support.hpp"

using namespace stresslab;
using namespace stresslab::provenance;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

RunManifest sample_manifest(const fs::path& dir) {
  RunManifest m;
  m.workspace_tag = "unit";
  m.model_config = Json{{"model", "synthetic"}, {"temperature", 0.7}};
  m.rag = true;
  m.use_news = true;
  m.entries = scan_artifacts(dir);
  m.metadata = Json{{"weo_hash", "abc"}, {"prices_hash", "def"}};
  m.run_id = new_run_id();
  m.started_utc = "2026-01-01T00:00:00Z";
  m.finished_utc = "2026-01-01T00:01:00Z";
  return m;
}

}  // namespace

TEST(HashArtifact, EmptyFileDigest) {
  testsupport::TempDir dir("prov");
  write(dir.path() / "empty.bin", "");
  auto h = hash_artifact(dir.path() / "empty.bin");
  EXPECT_EQ(h.sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_FALSE(h.row_count.has_value());
  EXPECT_THROW(hash_artifact(dir.path() / "nope"), MissingArtifactError);
}

TEST(HashArtifact, CsvRowsAndByteSensitivity) {
  testsupport::TempDir dir("prov");
  std::string text = "a,b\n";
  for (int i = 0; i < 50; ++i) text += std::to_string(i) + "," + std::to_string(i * i) + "\n";
  write(dir.path() / "t.csv", text);
  auto h = hash_artifact(dir.path() / "t.csv");
  ASSERT_TRUE(h.row_count.has_value());
  EXPECT_EQ(*h.row_count, 50u);
  text[10] = static_cast<char>(text[10] ^ 1);
  write(dir.path() / "t.csv", text);
  EXPECT_NE(hash_artifact(dir.path() / "t.csv").sha256, h.sha256);
}

TEST(RunId, Version4Shape) {
  auto id = new_run_id();
  ASSERT_EQ(id.size(), 36u);
  EXPECT_EQ(id[14], '4');
  EXPECT_NE(id, new_run_id());
}

TEST(Manifest, RoundTripAndSortedEntries) {
  testsupport::TempDir dir("prov");
  write(dir.path() / "z.csv", "h\n1\n");
  write(dir.path() / "a/b.jsonl", "{}\n");
  write(dir.path() / "m.txt", "x");
  auto m = sample_manifest(dir.path());
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].path, "a/b.jsonl");
  EXPECT_EQ(m.entries[2].path, "z.csv");
  write_manifest(m, dir.path());
  auto back = read_manifest(dir.path());
  EXPECT_EQ(serialize(back), serialize(m));
  EXPECT_EQ(back.entries, m.entries);
  // The manifest never lists itself.
  EXPECT_EQ(scan_artifacts(dir.path()).size(), 3u);
}

TEST(Manifest, StableSectionIgnoresVolatileFields) {
  testsupport::TempDir dir("prov");
  write(dir.path() / "x.csv", "h\n1\n");
  auto a = sample_manifest(dir.path());
  auto b = a;
  b.run_id = new_run_id();
  b.finished_utc = "2027-01-01T00:00:00Z";
  EXPECT_EQ(stable_section(a), stable_section(b));
  EXPECT_NE(serialize(a), serialize(b));
}

TEST(Replay, SelfMatchAndSinglePerturbation) {
  testsupport::TempDir dir("prov");
  for (int i = 0; i < 5; ++i) write(dir.path() / ("f" + std::to_string(i) + ".csv"), "h\n" + std::to_string(i) + "\n");
  auto a = sample_manifest(dir.path());
  auto self = verify_replay(a, a);
  EXPECT_TRUE(self.all_match());
  EXPECT_EQ(self.matching.size(), 5u + a.metadata.size());

  write(dir.path() / "f3.csv", "h\n33\n");
  auto b = sample_manifest(dir.path());
  auto r = verify_replay(a, b);
  ASSERT_EQ(r.mismatching.size(), 1u);
  EXPECT_EQ(r.mismatching[0], "f3.csv");

  b.metadata["weo_hash"] = "changed";
  r = verify_replay(a, b);
  EXPECT_EQ(r.mismatching.size(), 2u);
}

TEST(Replay, DifferentKeySetsAreStructural) {
  testsupport::TempDir dir("prov");
  write(dir.path() / "a.csv", "h\n1\n");
  auto a = sample_manifest(dir.path());
  write(dir.path() / "b.csv", "h\n2\n");
  auto b = sample_manifest(dir.path());
  try {
    verify_replay(a, b);
    FAIL() << "expected ReplayStructureError";
  } catch (const ReplayStructureError& e) {
    EXPECT_NE(std::string(e.what()).find("b.csv"), std::string::npos);
  }
}

TEST(Manifest, MalformedFileIsParseError) {
  testsupport::TempDir dir("prov");
  write(dir.path() / kManifestName, "{not json");
  EXPECT_THROW(read_manifest(dir.path()), ParseError);
  EXPECT_THROW(read_manifest(dir.path() / "missing"), MissingArtifactError);
}
