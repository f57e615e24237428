#include <gtest/gtest.h>

#include <set>

#include "gisc/hash.hpp"

namespace gisc {
namespace {

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(DeriveSeed, PureAndTaskDependent) {
  EXPECT_EQ(derive_seed(42, "screen"), derive_seed(42, "screen"));
  std::set<std::uint64_t> seen;
  for (const char* task : {"screen", "split", "synthetic/0", "synthetic/1", "noise/rayleigh/a"}) {
    seen.insert(derive_seed(42, task));
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_NE(derive_seed(42, "screen"), derive_seed(43, "screen"));
}

TEST(Hex, RoundTrip) {
  for (std::uint64_t v : {0ULL, 1ULL, 0xdeadbeefULL, ~0ULL}) {
    const auto text = to_hex(v);
    EXPECT_EQ(text.size(), 16u);
    EXPECT_EQ(from_hex(text), v);
  }
}

}  // namespace
}  // namespace gisc
