#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace afua {

// Thrown when an internal model invariant breaks (a bug, not bad input).
// The CLI maps this to exit code 2; bad user input maps to exit code 1.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

enum class Label { not_chewing = 0, chewing = 1 };

inline const char* label_name(Label l) {
  return l == Label::chewing ? "chewing" : "not_chewing";
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable per-stream seed from a master seed and a stream index, so e.g.
// segment k of a generated corpus always sees the same noise realization.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

// FNV-1a, used to stamp output artifacts with the config that produced them.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace afua
