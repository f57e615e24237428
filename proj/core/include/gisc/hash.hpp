#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gisc {

// 64-bit FNV-1a. Stable across platforms and standard libraries, which
// std::hash is not; used for fingerprints written to disk.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Mixes a master seed with a task identifier into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view task_id);

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view text);

}  // namespace gisc
