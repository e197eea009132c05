// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/hash.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace nahr {
namespace {

TEST(Fingerprint, MatchesKnownBlake2bVectors) {
  EXPECT_EQ(fingerprint128("").hex(), "cae66941d9efbd404e4d88758ea67670");
  EXPECT_EQ(fingerprint128("abc").hex(), "cf4ab791c62b8d2b2109c90275287816");
}

TEST(Fingerprint, HexRoundTrip) {
  const auto fp = fingerprint128("some text");
  const auto back = Fingerprint128::from_hex(fp.hex());
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, fp);
  EXPECT_FALSE(Fingerprint128::from_hex("xyz").has_value());
  EXPECT_FALSE(Fingerprint128::from_hex(std::string(32, 'g')).has_value());
}

TEST(Digest, MatchesKnownVectors) {
  EXPECT_EQ(digest_hex(""), "0e5751c026e543b2e8ab2eb06099daa1d1e5df47778f7787faab45cdf12fe3a8");
  EXPECT_EQ(digest_hex("abc"), "bddd813c634239723171ef3fee98579b94964e3bb1cb3e427262c8c068d52319");
}

TEST(Digest, StreamingEqualsOneShot) {
  StreamingDigest d;
  d.update("a");
  d.update("bc");
  EXPECT_EQ(d.finish(), digest_hex("abc"));
}

TEST(Digest, FileDigestEqualsContentDigest) {
  const auto path = std::filesystem::temp_directory_path() / "nahr_hash_test.bin";
  std::string content(1 << 20, 'x');
  content[12345] = 'y';
  std::ofstream(path, std::ios::binary) << content;
  EXPECT_EQ(file_digest_hex(path), digest_hex(content));
  std::filesystem::remove(path);
}

TEST(Hash64, SeedChangesValue) {
  static_assert(hash64("a") != hash64("b"));
  EXPECT_NE(hash64("abc", 1), hash64("abc", 2));
  EXPECT_EQ(hash64("abc", 7), hash64("abc", 7));
}

}  // namespace
}  // namespace nahr
