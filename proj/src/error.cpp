#include "pcd/error.hpp"

namespace pcd {

std::string_view domain_name(ErrorDomain d) {
  switch (d) {
    case ErrorDomain::data: return "data";
    case ErrorDomain::parse: return "parse";
    case ErrorDomain::format: return "format";
    case ErrorDomain::io: return "io";
    case ErrorDomain::sampling: return "sampling";
    case ErrorDomain::selection: return "selection";
    case ErrorDomain::contract: return "contract";
    case ErrorDomain::config: return "config";
    case ErrorDomain::divergence: return "divergence";
  }
  return "unknown";
}

Error::Error(ErrorDomain domain, const std::string& what)
    : std::runtime_error(what), domain_(domain) {}

void fail(ErrorDomain domain, const std::string& what) { throw Error(domain, what); }

}  // namespace pcd
