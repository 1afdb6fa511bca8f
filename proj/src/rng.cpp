#include "gridlab/rng.hpp"

#include <cstdio>

#include "gridlab/errors.hpp"

namespace gridlab {

std::string Rng::serialize() const {
  std::string out;
  char buf[17];
  for (std::size_t i = 0; i < state_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_[i]));
    if (i != 0) out += ':';
    out += buf;
  }
  return out;
}

Rng Rng::deserialize(const std::string& text) {
  State s{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (pos + 16 > text.size() || (i + 1 < s.size() && (pos + 16 >= text.size() || text[pos + 16] != ':'))) {
      throw ParseError("malformed rng state '" + text + "'", 1, pos + 1);
    }
    std::uint64_t word = 0;
    for (std::size_t k = 0; k < 16; ++k) {
      const char ch = text[pos + k];
      int digit;
      if (ch >= '0' && ch <= '9') {
        digit = ch - '0';
      } else if (ch >= 'a' && ch <= 'f') {
        digit = ch - 'a' + 10;
      } else {
        throw ParseError("bad hex digit in rng state", 1, pos + k + 1);
      }
      word = (word << 4) | static_cast<std::uint64_t>(digit);
    }
    s[i] = word;
    pos += 17;
  }
  if (pos - 1 != text.size()) throw ParseError("trailing characters in rng state", 1, pos);
  Rng rng;
  rng.set_state(s);
  return rng;
}

}  // namespace gridlab
