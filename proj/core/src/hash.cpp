// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/hash.hpp"

#include <sodium.h>

#include <array>
#include <fstream>

#include "nahr/error.hpp"

namespace nahr {
namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error("libsodium initialization failed");
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[data[i] >> 4];
    out[2 * i + 1] = kDigits[data[i] & 0xf];
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string Fingerprint128::hex() const {
  std::array<unsigned char, 16> bytes{};
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(hi >> (56 - 8 * i));
    bytes[8 + i] = static_cast<unsigned char>(lo >> (56 - 8 * i));
  }
  return to_hex(bytes.data(), bytes.size());
}

std::optional<Fingerprint128> Fingerprint128::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  Fingerprint128 f;
  for (std::size_t i = 0; i < 32; ++i) {
    const int v = hex_value(hex[i]);
    if (v < 0) return std::nullopt;
    auto& word = i < 16 ? f.hi : f.lo;
    word = (word << 4) | static_cast<std::uint64_t>(v);
  }
  return f;
}

Fingerprint128 fingerprint128(std::string_view bytes) {
  ensure_sodium();
  std::array<unsigned char, 16> out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size(), nullptr, 0);
  Fingerprint128 f;
  for (int i = 0; i < 8; ++i) {
    f.hi = (f.hi << 8) | out[i];
    f.lo = (f.lo << 8) | out[8 + i];
  }
  return f;
}

struct StreamingDigest::State {
  crypto_generichash_state st;
};

StreamingDigest::StreamingDigest() : state_(std::make_unique<State>()) {
  ensure_sodium();
  crypto_generichash_init(&state_->st, nullptr, 0, 32);
}

StreamingDigest::~StreamingDigest() = default;
StreamingDigest::StreamingDigest(StreamingDigest&&) noexcept = default;
StreamingDigest& StreamingDigest::operator=(StreamingDigest&&) noexcept = default;

void StreamingDigest::update(std::string_view bytes) {
  crypto_generichash_update(&state_->st, reinterpret_cast<const unsigned char*>(bytes.data()),
                            bytes.size());
}

std::string StreamingDigest::finish() {
  std::array<unsigned char, 32> out{};
  crypto_generichash_final(&state_->st, out.data(), out.size());
  return to_hex(out.data(), out.size());
}

std::string digest_hex(std::string_view bytes) {
  StreamingDigest d;
  d.update(bytes);
  return d.finish();
}

std::string file_digest_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  StreamingDigest d;
  std::string buf(1 << 20, '\0');
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return d.finish();
}

}  // namespace nahr
