#pragma once

#include <stdexcept>
#include <string>

namespace srs {

// Violated type invariant or precondition. The CLI maps this to exit code 3.
class invariant_violation : public std::runtime_error {
 public:
  explicit invariant_violation(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced where a finite one is required. CLI exit code 4.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed configuration document: parse failure, unknown key, or wrong
// value type. The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw invariant_violation(msg);
}

}  // namespace detail
}  // namespace srs
