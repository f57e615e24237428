#include "gisc/error.hpp"

namespace gisc {

FormatError::FormatError(const std::string& what, std::uint64_t byte_offset)
    : Error("format error at byte " + std::to_string(byte_offset) + ": " + what, 2),
      byte_offset_(byte_offset) {}

}  // namespace gisc
