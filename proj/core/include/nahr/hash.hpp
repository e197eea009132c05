// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace nahr {

/// 128-bit content fingerprint (BLAKE2b with a 16-byte digest).
struct Fingerprint128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const Fingerprint128&) const = default;

  std::string hex() const;
  static std::optional<Fingerprint128> from_hex(std::string_view hex);
};

struct Fingerprint128Hash {
  std::size_t operator()(const Fingerprint128& f) const noexcept {
    return static_cast<std::size_t>(f.lo ^ (f.hi * 0x9e3779b97f4a7c15ULL));
  }
};

inline constexpr std::string_view kFingerprintAlgorithm = "blake2b-128";
inline constexpr std::string_view kFileDigestAlgorithm = "blake2b-256";

Fingerprint128 fingerprint128(std::string_view bytes);

/// Incremental BLAKE2b-256, used for output-file verification.
class StreamingDigest {
 public:
  StreamingDigest();
  ~StreamingDigest();
  StreamingDigest(StreamingDigest&&) noexcept;
  StreamingDigest& operator=(StreamingDigest&&) noexcept;

  void update(std::string_view bytes);
  /// Finalizes and returns the lowercase hex digest. The object is spent.
  std::string finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string digest_hex(std::string_view bytes);
std::string file_digest_hex(const std::filesystem::path& path);

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Fast non-cryptographic 64-bit hash (FNV-1a folded through mix64).
constexpr std::uint64_t hash64(std::string_view bytes, std::uint64_t seed = 0) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace nahr
