#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcd {

// Error domains double as the machine-parsable prefix printed by the CLI
// ("ERROR <domain>: ...").
enum class ErrorDomain {
  data,        // invalid point data (non-finite coordinates, empty clouds)
  parse,       // OFF text parsing
  format,      // PCDS / PLY binary or header problems
  io,
  sampling,
  selection,
  contract,    // shape or precondition violations inside the library
  config,
  divergence,
};

std::string_view domain_name(ErrorDomain d);

class Error : public std::runtime_error {
 public:
  Error(ErrorDomain domain, const std::string& what);

  ErrorDomain domain() const noexcept { return domain_; }

 private:
  ErrorDomain domain_;
};

[[noreturn]] void fail(ErrorDomain domain, const std::string& what);

inline void require(bool cond, ErrorDomain domain, const std::string& what) {
  if (!cond) fail(domain, what);
}

}  // namespace pcd
