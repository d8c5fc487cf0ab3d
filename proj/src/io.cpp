#include "qjoint/io.hpp"

#include "qjoint/states.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qjoint::io {

namespace {

std::string shortest(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

template <ScalarType S>
nlohmann::json exact_value(const S& v) {
  if constexpr (std::is_same_v<S, Rational>) {
    return rational_string(v);
  } else {
    return v.value;
  }
}

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

template <ScalarType S>
nlohmann::json to_json(const JointGrid<S>& grid) {
  nlohmann::json j;
  j["schema"] = kGridSchema;
  j["kind"] = "grid";
  j["mode"] = qjoint::to_string(scalar_traits<S>::mode);
  j["signed"] = grid.is_signed;
  j["row_labels"] = grid.row_labels;
  j["col_labels"] = grid.col_labels;
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json floats = nlohmann::json::array();
  nlohmann::json errors = nlohmann::json::array();
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    nlohmann::json vr = nlohmann::json::array(), fr = nlohmann::json::array(),
                   er = nlohmann::json::array();
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      vr.push_back(exact_value(grid.values(r, c)));
      fr.push_back(finite_or_null(to_double(grid.values(r, c))));
      er.push_back(finite_or_null(grid.cell_error(r, c)));
    }
    values.push_back(vr);
    floats.push_back(fr);
    errors.push_back(er);
  }
  j["values"] = values;
  j["float_values"] = floats;
  j["errors"] = errors;
  return j;
}

template <ScalarType S>
nlohmann::json to_json(const pn::RaggedJoint<S>& grid) {
  nlohmann::json j;
  j["schema"] = kGridSchema;
  j["kind"] = "ragged";
  j["mode"] = qjoint::to_string(scalar_traits<S>::mode);
  j["signed"] = grid.is_signed;
  j["m_definition"] = pn::to_string(grid.mdef);
  // Represented value = stored value * e^exp_weight.
  j["exp_weight"] = rational_string(grid.exp_weight);
  nlohmann::json rows = nlohmann::json::array();
  for (unsigned total = 0; total < grid.rows.size(); ++total) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [m, v] : grid.rows[total]) {
      const Tracked w = pn::weighted_value(v, grid.exp_weight);
      cells.push_back({{"m", rational_string(m)},
                       {"stored", exact_value(v)},
                       {"value", finite_or_null(w.value)},
                       {"error", finite_or_null(w.err)}});
    }
    rows.push_back({{"N", total}, {"cells", cells}});
  }
  j["rows"] = rows;
  return j;
}

template <ScalarType S>
std::string to_csv(const JointGrid<S>& grid) {
  std::ostringstream out;
  out << "row,col,value,float,error\n";
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      const S& v = grid.values(r, c);
      out << grid.row_labels[r] << ',' << grid.col_labels[c] << ',';
      if constexpr (std::is_same_v<S, Rational>) {
        out << rational_string(v);
      } else {
        out << shortest(v.value);
      }
      out << ',' << shortest(to_double(v)) << ',' << shortest(grid.cell_error(r, c)) << '\n';
    }
  }
  return out.str();
}

template <ScalarType S>
std::string to_csv(const pn::RaggedJoint<S>& grid) {
  std::ostringstream out;
  out << "N,m,stored,exp_weight,value,error\n";
  for (unsigned total = 0; total < grid.rows.size(); ++total) {
    for (const auto& [m, v] : grid.rows[total]) {
      const Tracked w = pn::weighted_value(v, grid.exp_weight);
      out << total << ',' << rational_string(m) << ',';
      if constexpr (std::is_same_v<S, Rational>) {
        out << rational_string(v);
      } else {
        out << shortest(v.value);
      }
      out << ',' << rational_string(grid.exp_weight) << ',' << shortest(w.value) << ','
          << shortest(w.err) << '\n';
    }
  }
  return out.str();
}

template nlohmann::json to_json(const JointGrid<Rational>&);
template nlohmann::json to_json(const JointGrid<Tracked>&);
template nlohmann::json to_json(const pn::RaggedJoint<Rational>&);
template nlohmann::json to_json(const pn::RaggedJoint<Tracked>&);
template std::string to_csv(const JointGrid<Rational>&);
template std::string to_csv(const JointGrid<Tracked>&);
template std::string to_csv(const pn::RaggedJoint<Rational>&);
template std::string to_csv(const pn::RaggedJoint<Tracked>&);

// ---------------------------------------------------------------------------

std::string to_string(Format f) {
  switch (f) {
    case Format::ascii: return "ascii";
    case Format::pgm: return "pgm";
    case Format::csv: return "csv";
    case Format::json: return "json";
  }
  return "json";
}

Format parse_format(const std::string& text) {
  if (text == "ascii") return Format::ascii;
  if (text == "pgm") return Format::pgm;
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  throw ParseError("unknown format '" + text + "' (ascii, pgm, csv, json)");
}

template <ScalarType S>
RenderGrid render_view(const JointGrid<S>& grid) {
  RenderGrid g;
  for (long l : grid.row_labels) g.row_labels.push_back(std::to_string(l));
  for (long l : grid.col_labels) g.col_labels.push_back(std::to_string(l));
  g.cells.resize(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index r = 0; r < grid.rows(); ++r)
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      g.cells[static_cast<std::size_t>(r)].push_back(to_double(grid.values(r, c)));
  return g;
}

template <ScalarType S>
RenderGrid render_view(const pn::RaggedJoint<S>& grid) {
  std::set<Rational> keys;
  for (const auto& row : grid.rows)
    for (const auto& [m, v] : row) keys.insert(m);
  const std::vector<Rational> cols(keys.begin(), keys.end());
  RenderGrid g;
  for (const auto& m : cols) g.col_labels.push_back(format_rational(m));
  for (unsigned total = 0; total < grid.rows.size(); ++total) {
    g.row_labels.push_back(std::to_string(total));
    std::vector<std::optional<double>> row(cols.size());
    for (const auto& [m, v] : grid.rows[total]) {
      const auto at = std::lower_bound(cols.begin(), cols.end(), m) - cols.begin();
      row[static_cast<std::size_t>(at)] = pn::weighted_value(v, grid.exp_weight).value;
    }
    g.cells.push_back(std::move(row));
  }
  return g;
}

template RenderGrid render_view(const JointGrid<Rational>&);
template RenderGrid render_view(const JointGrid<Tracked>&);
template RenderGrid render_view(const pn::RaggedJoint<Rational>&);
template RenderGrid render_view(const pn::RaggedJoint<Tracked>&);

namespace {

double max_magnitude(const RenderGrid& g) {
  double m = 0.0;
  for (const auto& row : g.cells)
    for (const auto& c : row)
      if (c && std::isfinite(*c)) m = std::max(m, std::abs(*c));
  return m;
}

int bucket(double v, double max_abs) {
  if (max_abs == 0.0) return 0;
  return std::min(9, static_cast<int>(std::floor(10.0 * std::abs(v) / max_abs)));
}

}  // namespace

std::string render_ascii(const RenderGrid& g) {
  const double max_abs = max_magnitude(g);
  std::ostringstream out;
  out << "# chessboard: rows " << (g.row_labels.empty() ? "" : g.row_labels.front()) << ".."
      << (g.row_labels.empty() ? "" : g.row_labels.back()) << ", columns "
      << (g.col_labels.empty() ? "" : g.col_labels.front()) << ".."
      << (g.col_labels.empty() ? "" : g.col_labels.back()) << "\n";
  out << "# bucket = min(9, floor(10 |v| / max|v|)), max|v| = " << shortest(max_abs) << "\n";
  out << "# positive 0-9, negative A-J (J most negative), zero '.', absent ' '\n";
  std::size_t width = 0;
  for (const auto& l : g.row_labels) width = std::max(width, l.size());
  for (std::size_t r = 0; r < g.cells.size(); ++r) {
    out << std::string(width - g.row_labels[r].size(), ' ') << g.row_labels[r] << ' ';
    for (const auto& c : g.cells[r]) {
      if (!c) {
        out << ' ';
      } else if (*c == 0.0) {
        out << '.';
      } else if (!std::isfinite(*c)) {
        out << '?';
      } else {
        const int b = bucket(*c, max_abs);
        out << static_cast<char>(*c < 0.0 ? 'A' + b : '0' + b);
      }
    }
    out << '\n';
  }
  return out.str();
}

PgmImages render_pgm(const RenderGrid& g, unsigned cell_pixels) {
  const double max_abs = max_magnitude(g);
  const std::size_t rows = g.cells.size();
  const std::size_t cols = rows == 0 ? 0 : g.cells.front().size();
  const std::size_t w = cols * cell_pixels, h = rows * cell_pixels;
  const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::string mag(w * h, static_cast<char>(255));
  std::string sign(w * h, static_cast<char>(0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& v = g.cells[r][c];
      if (!v || !std::isfinite(*v)) continue;
      const double level = max_abs == 0.0 ? 0.0 : std::abs(*v) / max_abs;
      const auto gray = static_cast<unsigned char>(std::lround(255.0 * (1.0 - level)));
      const auto mask = static_cast<unsigned char>(*v < 0.0 ? 255 : 0);
      for (std::size_t y = r * cell_pixels; y < (r + 1) * cell_pixels; ++y) {
        for (std::size_t x = c * cell_pixels; x < (c + 1) * cell_pixels; ++x) {
          mag[y * w + x] = static_cast<char>(gray);
          sign[y * w + x] = static_cast<char>(mask);
        }
      }
    }
  }
  return {header + mag, header + sign};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UnwritableOutput("cannot open '" + path.string() + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw UnwritableOutput("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> write_chessboard(const RenderGrid& view, const nlohmann::json& json,
                                                    const std::string& csv, Format format,
                                                    const std::filesystem::path& path) {
  switch (format) {
    case Format::ascii: write_file(path, render_ascii(view)); return {path};
    case Format::csv: write_file(path, csv); return {path};
    case Format::json: write_file(path, json.dump(2) + "\n"); return {path};
    case Format::pgm: {
      const PgmImages img = render_pgm(view);
      std::filesystem::path mask = path;
      mask.replace_filename(path.stem().string() + "_sign" + path.extension().string());
      write_file(path, img.magnitude);
      write_file(mask, img.sign_mask);
      return {path, mask};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config key '" + key + "': bad value '" + value + "'");
  }
  return out;
}

}  // namespace

void RunConfig::merge(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  unsigned lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "scheme") {
        if (value != "qubit" && value != "nn" && value != "pn" && !value.empty()) {
          throw ParseError("unknown scheme '" + value + "'");
        }
        scheme = value;
      } else if (key == "state") {
        state = value.empty() ? "" : qjoint::to_string(parse_state_spec(value));
      } else if (key == "mode") {
        mode = value.empty() ? "" : qjoint::to_string(parse_scalar_mode(value));
      } else if (key == "cutoff") {
        cutoff = parse_number<unsigned>(key, value);
      } else if (key == "extent") {
        extent = parse_number<unsigned>(key, value);
      } else if (key == "tolerance") {
        tolerance = parse_number<double>(key, value);
      } else if (key == "format") {
        format = to_string(parse_format(value));
      } else if (key == "output") {
        output = value;
      } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
      } else if (key == "phi") {
        phi = parse_number<double>(key, value);
      } else if (key == "ref_nbar") {
        ref_nbar = format_rational(parse_rational(value));
      } else if (key == "m_def") {
        m_def = pn::to_string(pn::parse_m_definition(value));
      } else if (key == "shots") {
        shots = parse_number<std::uint64_t>(key, value);
      } else if (key == "bootstrap") {
        bootstrap = parse_number<unsigned>(key, value);
      } else {
        throw ParseError("unknown config key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("config key '" + key + "': " + e.what());
    }
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "scheme=" << scheme << '\n'
      << "state=" << state << '\n'
      << "mode=" << mode << '\n';
  if (cutoff) out << "cutoff=" << *cutoff << '\n';
  if (extent) out << "extent=" << *extent << '\n';
  out << "tolerance=" << shortest(tolerance) << '\n'
      << "format=" << format << '\n'
      << "output=" << output << '\n'
      << "seed=" << seed << '\n'
      << "phi=" << shortest(phi) << '\n'
      << "ref_nbar=" << ref_nbar << '\n'
      << "m_def=" << m_def << '\n'
      << "shots=" << shots << '\n'
      << "bootstrap=" << bootstrap << '\n';
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  c.merge(text);
  return c;
}

}  // namespace qjoint::io
