#ifndef QJOINT_REPRODUCE_HPP
#define QJOINT_REPRODUCE_HPP

#include <json.hpp>

#include <map>
#include <string>

namespace qjoint {

inline constexpr const char* kManifestSchema = "qjoint.manifest/1";

/// Files of one figure recipe, keyed by file name. Contents are
/// deterministic: no timestamps or host details.
struct Bundle {
  std::map<std::string, std::string> files;
  nlohmann::json manifest;
  bool converged = true;
};

/// Canonical pipelines for the four chessboards:
///   1  number-number, |7>, rational, full support
///   2  number-number, photon-added thermal k = nbar = 1, rational, extent 10
///   3  number-number, squeezed vacuum r = 0.3, float, extent 10
///   4  phase-number, vacuum system, reference nbar = 1, rational
Bundle reproduce(int figure);

}  // namespace qjoint

#endif  // QJOINT_REPRODUCE_HPP
