#ifndef QJOINT_IO_HPP
#define QJOINT_IO_HPP

#include "qjoint/inversion.hpp"
#include "qjoint/phase_number.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qjoint::io {

inline constexpr const char* kGridSchema = "qjoint.grid/1";

/// Exact values print as "p/q" strings, tracked values as numbers; every
/// cell also carries a float value and an error bound.
template <ScalarType S>
nlohmann::json to_json(const JointGrid<S>& grid);
template <ScalarType S>
nlohmann::json to_json(const pn::RaggedJoint<S>& grid);

template <ScalarType S>
std::string to_csv(const JointGrid<S>& grid);
template <ScalarType S>
std::string to_csv(const pn::RaggedJoint<S>& grid);

enum class Format { ascii, pgm, csv, json };
std::string to_string(Format f);
Format parse_format(const std::string& text);

/// Rectangular view used by the image renderers; absent cells are empty.
struct RenderGrid {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::optional<double>>> cells;
};

template <ScalarType S>
RenderGrid render_view(const JointGrid<S>& grid);
/// Columns are the sorted union of all m keys.
template <ScalarType S>
RenderGrid render_view(const pn::RaggedJoint<S>& grid);

/// Positive cells print '0'..'9' and negative cells 'A'..'J' by
/// floor(10 |v| / max|v|), capped at 9; 'J' is the most negative bucket.
/// Exact zeros print '.', absent cells ' '.
std::string render_ascii(const RenderGrid& g);

struct PgmImages {
  std::string magnitude;  // binary P5, darker = larger |v| / max|v|
  std::string sign_mask;  // binary P5, 255 where the cell is negative
};
PgmImages render_pgm(const RenderGrid& g, unsigned cell_pixels = 16);

/// Files written for one chessboard; pgm also writes <stem>_sign.pgm.
std::vector<std::filesystem::path> write_chessboard(const RenderGrid& view, const nlohmann::json& json,
                                                    const std::string& csv, Format format,
                                                    const std::filesystem::path& path);

/// Writes text, throwing UnwritableOutput on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------

/// Flat key=value run description; `#` starts a comment.
struct RunConfig {
  std::string scheme;
  std::string state;
  std::string mode;
  std::optional<unsigned> cutoff;
  std::optional<unsigned> extent;
  double tolerance = 1e-9;
  std::string format = "json";
  std::string output;
  std::uint64_t seed = 1;
  double phi = 0.0;  // 0 selects the default pi/4
  std::string ref_nbar = "1";
  std::string m_def = "normalized";
  std::uint64_t shots = 100000;
  unsigned bootstrap = 1000;

  /// Applies keys from `text` on top of the current values.
  void merge(const std::string& text);
  /// Canonical form: known keys in fixed order, values normalized.
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
};

}  // namespace qjoint::io

#endif  // QJOINT_IO_HPP
