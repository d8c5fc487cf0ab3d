// Command-line front end: one subcommand per scheme plus the figure recipes.
// Exit codes: 0 success, 1 error (JSON on stderr), 2 ran but did not converge.

#include "qjoint/io.hpp"
#include "qjoint/number_number.hpp"
#include "qjoint/phase_number.hpp"
#include "qjoint/qubit.hpp"
#include "qjoint/reproduce.hpp"
#include "qjoint/sampler.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace qjoint;
using nlohmann::json;

namespace {

constexpr int kNotConverged = 2;

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// --config must be known before the flags bind their defaults.
std::optional<std::string> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

ScalarMode resolve_mode(const io::RunConfig& cfg, const StateSpec& spec) {
  return cfg.mode.empty() ? default_mode(spec) : parse_scalar_mode(cfg.mode);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_file(path, text);
  }
}

// Writes the grid in the requested format; json uses the full report.
void emit_board(const io::RenderGrid& view, const json& report, const std::string& csv,
                const io::RunConfig& cfg) {
  const io::Format f = io::parse_format(cfg.format);
  if (f == io::Format::pgm) {
    if (cfg.output.empty()) throw UnwritableOutput("pgm output needs --output <file.pgm>");
    io::write_chessboard(view, report, csv, f, cfg.output);
    return;
  }
  switch (f) {
    case io::Format::ascii: emit(io::render_ascii(view), cfg.output); break;
    case io::Format::csv: emit(csv, cfg.output); break;
    default: emit(report.dump(2) + "\n", cfg.output); break;
  }
}

json negativity_json(const NegativityReport& n) {
  return {{"min_value", n.min_value},
          {"argmin", {n.argmin.first, n.argmin.second}},
          {"error_at_argmin", n.error_at_argmin},
          {"negative_mass", n.negative_mass},
          {"nonclassical", n.is_nonclassical}};
}

// ---------------------------------------------------------------------------

int run_qubit(const io::RunConfig& cfg, const std::vector<double>& bloch) {
  const qubit::QubitScheme scheme(cfg.phi == 0.0 ? std::numbers::pi / 4 : cfg.phi);
  const BlochState s(bloch.at(0), bloch.at(1), bloch.at(2));
  const JointGrid<Tracked> observed = qubit::observed_joint(s, scheme);
  const JointGrid<Tracked> simulated = qubit::simulate_coupled(s, scheme);
  JointGrid<Tracked> retrieved = qubit::retrieved_joint(s, scheme);
  retrieved.is_signed = true;
  const auto fixed = qubit::classify_fixed_axes(s);
  const auto optimal = qubit::classify_optimal_axes(s);

  double model_gap = 0.0;
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      model_gap = std::max(model_gap,
                           std::abs(observed.values(i, j).value - simulated.values(i, j).value));

  json report;
  report["scheme"] = "qubit";
  report["phi"] = scheme.phi();
  report["eta_x"] = scheme.eta_x().value;
  report["eta_y"] = scheme.eta_y().value;
  report["bloch"] = bloch;
  report["observed"] = io::to_json(observed);
  report["coupled_model_max_deviation"] = model_gap;
  report["retrieved"] = io::to_json(retrieved);
  report["negativity"] = negativity_json(negativity(retrieved));
  report["fixed_axes"] = {{"min_cell", fixed.min_cell.value}, {"nonclassical", fixed.nonclassical}};
  report["optimal_axes"] = {{"min_cell", optimal.min_cell.value},
                            {"nonclassical", optimal.nonclassical}};
  emit_board(io::render_view(retrieved), report, io::to_csv(retrieved), cfg);
  return 0;
}

int run_qubit_volume(std::uint64_t samples, std::uint64_t seed) {
  const auto est = qubit::nonclassical_volume_fraction_mc(samples, seed);
  const double exact = qubit::nonclassical_volume_fraction();
  json report = {{"analytic", exact},
                 {"monte_carlo", est.fraction},
                 {"standard_error", est.standard_error},
                 {"samples", est.samples},
                 {"seed", seed},
                 {"deviation_in_standard_errors",
                  est.standard_error > 0 ? std::abs(est.fraction - exact) / est.standard_error : 0.0}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

template <ScalarType S>
int run_nn_mode(const io::RunConfig& cfg, const StateSpec& spec, bool observed_only) {
  nn::RetrieveOptions options;
  options.cell_tolerance = cfg.tolerance;
  options.extent = cfg.extent;
  NumberDistribution<S> p;
  if (cfg.cutoff) {
    DistributionOptions d;
    d.cutoff = cfg.cutoff;
    d.tail_ceiling = 1.0;
    p = number_distribution<S>(spec, d);
  } else {
    p = nn::nn_source_distribution<S>(spec, options);
  }

  json report;
  report["scheme"] = "nn";
  report["state"] = to_string(spec);
  report["mode"] = to_string(scalar_traits<S>::mode);
  report["source_cutoff"] = p.cutoff;
  report["source_tail_bound"] = p.tail_bound;

  if (observed_only) {
    const nn::NNObserved<S> o = nn::nn_forward(p);
    report["grid"] = io::to_json(o.joint);
    emit_board(io::render_view(o.joint), report, io::to_csv(o.joint), cfg);
    return 0;
  }

  const nn::NNRetrieved<S> r = nn::nn_retrieve(p, options);
  const bool converged = r.all_converged && r.max_cell_error <= cfg.tolerance;
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    diags.push_back({{"N", d.total},
                     {"terms_used", d.terms_used},
                     {"truncation_bound", d.truncation_bound},
                     {"abs_term_sum", d.abs_term_sum},
                     {"converged", d.converged},
                     {"closed_form", d.closed_form}});
  }
  report["extent"] = r.extent;
  report["cell_tolerance"] = cfg.tolerance;
  report["max_cell_error"] = std::isfinite(r.max_cell_error) ? json(r.max_cell_error) : json(nullptr);
  report["converged"] = converged;
  report["negativity"] = negativity_json(negativity(r.joint));
  report["parity_mean"] = to_double(nn::parity_wigner_origin(p));
  report["diagnostics"] = diags;
  report["grid"] = io::to_json(r.joint);
  emit_board(io::render_view(r.joint), report, io::to_csv(r.joint), cfg);
  if (!converged) {
    std::cerr << json{{"error", "not converged"},
                      {"max_cell_error", report["max_cell_error"]},
                      {"cell_tolerance", cfg.tolerance}}
                     .dump()
              << "\n";
    return kNotConverged;
  }
  return 0;
}

int run_nn(const io::RunConfig& cfg, bool observed_only) {
  const StateSpec spec = parse_state_spec(cfg.state);
  return resolve_mode(cfg, spec) == ScalarMode::rational
             ? run_nn_mode<Rational>(cfg, spec, observed_only)
             : run_nn_mode<Tracked>(cfg, spec, observed_only);
}

template <ScalarType S>
int run_pn_mode(const io::RunConfig& cfg, const StateSpec& spec, bool observed_only) {
  const pn::ReferenceBeam ref(parse_rational(cfg.ref_nbar));
  const pn::MDefinition mdef = pn::parse_m_definition(cfg.m_def);
  pn::ForwardOptions options;
  options.cutoff = cfg.cutoff;
  options.tolerance = cfg.tolerance;
  DistributionOptions d;
  if (cfg.cutoff) d.cutoff = cfg.cutoff;
  const NumberDistribution<S> p = number_distribution<S>(spec, d);
  const pn::PNObserved<S> o = pn::pn_forward(p, ref, options);
  const pn::RaggedJoint<S> observed = pn::ragged_observed(o, mdef);

  json report;
  report["scheme"] = "pn";
  report["state"] = to_string(spec);
  report["mode"] = to_string(scalar_traits<S>::mode);
  report["reference_nbar"] = format_rational(ref.nbar);
  report["m_definition"] = pn::to_string(mdef);
  report["cutoff"] = o.cutoff;
  report["mass_deficit"] = o.mass_deficit;
  if (observed_only) {
    report["grid"] = io::to_json(observed);
    emit_board(io::render_view(observed), report, io::to_csv(observed), cfg);
    return 0;
  }
  const pn::RaggedJoint<S> r = pn::pn_retrieve(observed, ref.nbar);
  const pn::RaggedMinimum minimum = pn::ragged_minimum(r);
  report["minimum"] = {{"N", minimum.total},
                       {"m", rational_string(minimum.m)},
                       {"value", minimum.value.value},
                       {"error", minimum.value.err}};
  report["nonclassical"] = minimum.nonclassical;
  if (mdef == pn::MDefinition::normalized) {
    report["pc_identity"] = pn::weighted_value(pn::pc_identity(p, ref.nbar), Rational(0)).value;
    if (ref.nbar > 0) {
      const pn::VacuumVerdict v = pn::vacuum_verdict(p, ref.nbar);
      report["vacuum_verdict"] = {{"nonclassical", v.nonclassical}, {"note", v.note}};
    }
  }
  report["grid"] = io::to_json(r);
  emit_board(io::render_view(r), report, io::to_csv(r), cfg);
  return 0;
}

int run_pn(const io::RunConfig& cfg, bool observed_only) {
  const StateSpec spec = parse_state_spec(cfg.state);
  return resolve_mode(cfg, spec) == ScalarMode::rational
             ? run_pn_mode<Rational>(cfg, spec, observed_only)
             : run_pn_mode<Tracked>(cfg, spec, observed_only);
}

int run_sample(const io::RunConfig& cfg, const std::vector<double>& bloch, double level) {
  sampling::SampleRun run;
  sampling::Inverter inverter;
  std::vector<std::optional<double>> exact;  // exact retrieved value per output cell
  auto exact_lookup = [&](const auto& lookup) {
    for (const auto& key : inverter.output_cells) exact.push_back(lookup(key));
  };

  if (cfg.scheme == "qubit") {
    const qubit::QubitScheme scheme(cfg.phi == 0.0 ? std::numbers::pi / 4 : cfg.phi);
    const BlochState s(bloch.at(0), bloch.at(1), bloch.at(2));
    run = sampling::draw(qubit::observed_joint(s, scheme), cfg.shots, cfg.seed, "qubit");
    inverter = sampling::qubit_inverter(scheme);
    const JointGrid<Tracked> truth = qubit::retrieved_joint(s, scheme);
    exact_lookup([&](const sampling::CellKey& k) -> std::optional<double> {
      const Eigen::Index i = k.row == 1 ? 0 : 1;
      const Eigen::Index j = k.col == 1 ? 0 : 1;
      return truth.values(i, j).value;
    });
  } else if (cfg.scheme == "nn") {
    const StateSpec spec = parse_state_spec(cfg.state);
    nn::RetrieveOptions options;
    options.extent = cfg.extent;
    const auto p = nn::nn_source_distribution<Tracked>(spec, options);
    const unsigned K = cfg.cutoff.value_or(std::min(p.cutoff, nn::default_extent(p, 1e-9)));
    DistributionOptions d;
    d.cutoff = K;
    d.tail_ceiling = 1.0;
    const auto forward = nn::nn_forward(number_distribution<Tracked>(spec, d));
    run = sampling::draw(forward.joint, cfg.shots, cfg.seed, "nn");
    inverter = sampling::nn_inverter(K);
    options.extent = K;
    const auto truth = nn::nn_retrieve(p, options);
    exact_lookup([&](const sampling::CellKey& k) -> std::optional<double> {
      return truth.joint.values(k.row, k.col.convert_to<long>()).value;
    });
  } else if (cfg.scheme == "pn") {
    const StateSpec spec = parse_state_spec(cfg.state);
    const Rational nbar = parse_rational(cfg.ref_nbar);
    const pn::MDefinition mdef = pn::parse_m_definition(cfg.m_def);
    pn::ForwardOptions options;
    options.cutoff = cfg.cutoff;
    options.tolerance = std::max(cfg.tolerance, 1e-12);
    const auto p = number_distribution<Tracked>(spec);
    const auto o = pn::pn_forward(p, pn::ReferenceBeam(nbar), options);
    const auto observed = pn::ragged_observed(o, mdef);
    run = sampling::draw(observed, cfg.shots, cfg.seed, "pn");
    inverter = sampling::pn_inverter(o.cutoff, nbar, mdef);
    const auto truth = pn::pn_retrieve(observed, nbar);
    exact_lookup([&](const sampling::CellKey& k) -> std::optional<double> {
      return truth.value(static_cast<unsigned>(k.row), k.col).value;
    });
  } else {
    throw ParseError("--scheme must be qubit, nn or pn");
  }

  sampling::BootstrapOptions bo;
  bo.resamples = cfg.bootstrap;
  bo.level = level;
  bo.seed = cfg.seed;
  const sampling::EmpiricalInversion inv = sampling::empirical_invert(run, inverter, bo);

  json counts = json::array();
  for (std::size_t i = 0; i < run.cells.size(); ++i) {
    counts.push_back({{"row", run.cells[i].row},
                      {"col", rational_string(run.cells[i].col)},
                      {"count", run.counts[i]}});
  }
  json cells = json::array();
  for (std::size_t i = 0; i < inv.cells.size(); ++i) {
    json c = {{"row", inv.cells[i].row},
              {"col", rational_string(inv.cells[i].col)},
              {"estimate", inv.values[i]},
              {"standard_error", inv.standard_errors[i]}};
    if (exact[i]) c["exact"] = *exact[i];
    cells.push_back(c);
  }
  json report = {{"scheme", run.scheme},
                 {"shots", run.total},
                 {"seed", run.seed},
                 {"overflow", {{"count", run.overflow}, {"probability", run.overflow_probability}}},
                 {"counts", counts},
                 {"inverted", cells},
                 {"minimum",
                  {{"row", inv.cells[inv.argmin].row},
                   {"col", rational_string(inv.cells[inv.argmin].col)},
                   {"estimate", inv.min_value},
                   {"ci", {inv.ci_low, inv.ci_high}},
                   {"level", inv.level},
                   {"resamples", inv.resamples},
                   {"negativity_certified", inv.ci_high < 0.0}}}};
  if (cfg.scheme == "qubit") report["bloch"] = bloch;
  if (cfg.scheme != "qubit") report["state"] = to_string(parse_state_spec(cfg.state));
  emit(report.dump(2) + "\n", cfg.output);
  return 0;
}

int run_reproduce(int figure, const std::string& out_dir) {
  const Bundle b = reproduce(figure);
  const std::filesystem::path dir = out_dir.empty() ? "figure" + std::to_string(figure) : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UnwritableOutput("cannot create '" + dir.string() + "': " + ec.message());
  for (const auto& [name, content] : b.files) io::write_file(dir / name, content);
  std::cout << b.manifest.dump(2) << "\n";
  return b.converged ? 0 : kNotConverged;
}

int run_scan(const io::RunConfig& cfg, const std::string& family, const std::vector<double>& values) {
  const ScalarMode mode = cfg.mode.empty() ? ScalarMode::tracked : parse_scalar_mode(cfg.mode);
  const auto rows = nn::nn_stability_scan(family, values, mode, cfg.tolerance);
  if (cfg.format == "csv") {
    std::ostringstream out;
    out << "parameter,state,mode,extent,source_cutoff,joint_max_error,joint_reliable,"
           "joint_growth_rate,marginal_max_residual,marginal_max_error,marginal_reliable,"
           "marginal_growth_rate\n";
    for (const auto& r : rows) {
      out << r.parameter << ',' << r.state << ',' << to_string(r.mode) << ',' << r.extent << ','
          << r.source_cutoff << ',' << r.joint_max_error << ',' << r.joint_reliable << ','
          << r.joint_growth_rate << ',' << r.marginal_max_residual << ',' << r.marginal_max_error
          << ',' << r.marginal_reliable << ',' << r.marginal_growth_rate << '\n';
    }
    emit(out.str(), cfg.output);
    return 0;
  }
  json table = json::array();
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  for (const auto& r : rows) {
    table.push_back({{"parameter", r.parameter},
                     {"state", r.state},
                     {"mode", to_string(r.mode)},
                     {"extent", r.extent},
                     {"source_cutoff", r.source_cutoff},
                     {"joint", {{"max_error", num(r.joint_max_error)},
                                {"reliable", r.joint_reliable},
                                {"growth_rate", num(r.joint_growth_rate)}}},
                     {"marginal", {{"max_residual", num(r.marginal_max_residual)},
                                   {"max_error", num(r.marginal_max_error)},
                                   {"reliable", r.marginal_reliable},
                                   {"growth_rate", num(r.marginal_growth_rate)}}}});
  }
  emit(json{{"family", family}, {"tolerance", cfg.tolerance}, {"rows", table}}.dump(2) + "\n",
       cfg.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    io::RunConfig cfg;
    if (const char* env = std::getenv("QJOINT_SCALAR_MODE"); env && *env) {
      cfg.mode = to_string(parse_scalar_mode(env));
    }
    if (auto path = find_config(argc, argv)) cfg.merge(read_text(*path));

    CLI::App app{"Joint-measurement quasiprobabilities: retrieval, rendering and sampling"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value file applied before flags");

    auto add_common = [&](CLI::App* sub) {
      sub->add_option("--mode", cfg.mode, "rational | float (default: exact when possible)");
      sub->add_option("--format", cfg.format, "ascii | pgm | csv | json");
      sub->add_option("-o,--output", cfg.output, "output file (stdout when omitted)");
      sub->add_option("--tolerance", cfg.tolerance, "per-cell error tolerance");
    };

    // qubit
    std::vector<double> bloch{0.0, 0.0, 0.0};
    auto* q = app.add_subcommand("qubit", "noisy sigma_x / sigma_y joint measurement");
    q->add_option("--bloch", bloch, "Bloch vector x,y,z")->expected(3)->delimiter(',');
    q->add_option("--phi", cfg.phi, "ancilla angle in [0, pi/2] (default pi/4)");
    add_common(q);
    std::uint64_t volume_samples = 1000000;
    auto* qv = q->add_subcommand("volume", "nonclassical fraction of the Bloch ball");
    qv->add_option("--samples", volume_samples, "Monte Carlo samples");
    qv->add_option("--seed", cfg.seed, "random seed");

    // number-number
    bool observed_only = false;
    auto* nn_cmd = app.add_subcommand("nn", "number-number scheme (vacuum-port beam splitter)");
    nn_cmd->add_option("--state", cfg.state, "state spec, e.g. fock:7")->required();
    nn_cmd->add_option("--cutoff", cfg.cutoff, "source photon-number cutoff");
    nn_cmd->add_option("--extent", cfg.extent, "retrieved grid is (extent+1)^2");
    nn_cmd->add_flag("--observed", observed_only, "emit the observed statistics instead");
    add_common(nn_cmd);

    // phase-number
    auto* pn_cmd = app.add_subcommand("pn", "phase-number scheme (coherent reference)");
    pn_cmd->add_option("--state", cfg.state, "number-diagonal state spec")->required();
    pn_cmd->add_option("--ref-nbar", cfg.ref_nbar, "reference mean photon number");
    pn_cmd->add_option("--m-def", cfg.m_def, "normalized | difference | n1");
    pn_cmd->add_option("--cutoff", cfg.cutoff, "largest total photon number N");
    pn_cmd->add_flag("--observed", observed_only, "emit the observed statistics instead");
    add_common(pn_cmd);

    // sampling
    double level = 0.99;
    auto* sm = app.add_subcommand("sample", "finite-shot simulation with bootstrap intervals");
    sm->add_option("--scheme", cfg.scheme, "qubit | nn | pn")->required();
    sm->add_option("--state", cfg.state, "state spec (nn, pn)");
    sm->add_option("--bloch", bloch, "Bloch vector x,y,z (qubit)")->expected(3)->delimiter(',');
    sm->add_option("--phi", cfg.phi, "ancilla angle (qubit)");
    sm->add_option("--ref-nbar", cfg.ref_nbar, "reference mean photon number (pn)");
    sm->add_option("--m-def", cfg.m_def, "normalized | difference | n1 (pn)");
    sm->add_option("--cutoff", cfg.cutoff, "forward cutoff (nn, pn)");
    sm->add_option("--shots", cfg.shots, "number of shots");
    sm->add_option("--seed", cfg.seed, "random seed");
    sm->add_option("--bootstrap", cfg.bootstrap, "bootstrap resamples");
    sm->add_option("--level", level, "confidence level");
    sm->add_option("-o,--output", cfg.output, "output file (stdout when omitted)");

    // figures
    int figure = 1;
    std::string out_dir;
    auto* rp = app.add_subcommand("reproduce", "write a figure bundle with its manifest");
    rp->add_option("figure", figure, "1, 2, 3 or 4")->required()->check(CLI::Range(1, 4));
    rp->add_option("--output-dir", out_dir, "bundle directory (default figure<N>)");

    // stability scan
    std::string family = "sqvac";
    std::vector<double> values{0.01, 0.05, 0.1, 0.125, 0.2, 0.3, 0.5, 1.0};
    auto* sc = app.add_subcommand("scan", "number-number inversion stability against nbar");
    sc->add_option("--family", family, "sqvac | coherent | thermal | fock");
    sc->add_option("--values", values, "parameters (nbar, or n for fock)")->delimiter(',');
    sc->add_option("--mode", cfg.mode, "rational | float (default float)");
    sc->add_option("--tolerance", cfg.tolerance, "reliability tolerance");
    sc->add_option("--format", cfg.format, "json | csv");
    sc->add_option("-o,--output", cfg.output, "output file (stdout when omitted)");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
    if (!cfg.mode.empty()) cfg.mode = to_string(parse_scalar_mode(cfg.mode));

    if (*q) {
      if (*qv) return run_qubit_volume(volume_samples, cfg.seed);
      return run_qubit(cfg, bloch);
    }
    if (*nn_cmd) return run_nn(cfg, observed_only);
    if (*pn_cmd) return run_pn(cfg, observed_only);
    if (*sm) return run_sample(cfg, bloch, level);
    if (*rp) return run_reproduce(figure, out_dir);
    if (*sc) return run_scan(cfg, family, values);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
