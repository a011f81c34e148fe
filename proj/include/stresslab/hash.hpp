#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace stresslab {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  Digest finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

Digest sha256(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);
/// Lowercase 64-character hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);
/// Streaming digest of a file's bytes. Throws MissingArtifactError if unreadable.
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace stresslab
