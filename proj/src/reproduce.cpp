#include "qjoint/reproduce.hpp"

#include "qjoint/io.hpp"
#include "qjoint/number_number.hpp"
#include "qjoint/phase_number.hpp"

namespace qjoint {

namespace {

template <ScalarType S>
void add_renderings(Bundle& b, const nlohmann::json& json, const std::string& csv,
                    const io::RenderGrid& view) {
  b.files["grid.json"] = json.dump(2) + "\n";
  b.files["grid.csv"] = csv;
  b.files["chessboard.txt"] = io::render_ascii(view);
  const io::PgmImages img = io::render_pgm(view);
  b.files["chessboard.pgm"] = img.magnitude;
  b.files["chessboard_sign.pgm"] = img.sign_mask;
}

template <ScalarType S>
Bundle number_number_figure(int figure, const std::string& spec_text, unsigned extent) {
  const StateSpec spec = parse_state_spec(spec_text);
  nn::RetrieveOptions options;
  options.extent = extent;
  const NumberDistribution<S> p = nn::nn_source_distribution<S>(spec, options);
  const nn::NNRetrieved<S> r = nn::nn_retrieve(p, options);
  const NegativityReport neg = negativity(r.joint);

  Bundle b;
  add_renderings<S>(b, io::to_json(r.joint), io::to_csv(r.joint), io::render_view(r.joint));
  b.converged = r.all_converged && r.max_cell_error <= options.cell_tolerance;

  nlohmann::json minimum;
  // Number-number labels are 0..extent, so labels double as indices.
  minimum["cell"] = {neg.argmin.first, neg.argmin.second};
  const S& min_value = r.joint.values(neg.argmin.first, neg.argmin.second);
  if constexpr (std::is_same_v<S, Rational>) {
    minimum["value"] = rational_string(min_value);
  } else {
    minimum["value"] = min_value.value;
  }
  minimum["error"] = neg.error_at_argmin;

  nlohmann::json& m = b.manifest;
  m["schema"] = kManifestSchema;
  m["figure"] = figure;
  m["scheme"] = "nn";
  m["state"] = to_string(spec);
  m["mode"] = to_string(scalar_traits<S>::mode);
  m["precision"] = scalar_traits<S>::is_exact ? "exact rational"
                                              : "binary64 with propagated error bounds";
  m["source_cutoff"] = p.cutoff;
  m["source_tail_bound"] = p.tail_bound;
  m["extent"] = r.extent;
  m["cell_tolerance"] = options.cell_tolerance;
  m["max_cell_error"] = r.max_cell_error;
  m["converged"] = b.converged;
  m["nonclassical"] = neg.is_nonclassical;
  m["minimum"] = minimum;
  return b;
}

Bundle phase_number_figure() {
  const StateSpec spec = parse_state_spec("vacuum");
  const pn::ReferenceBeam ref(Rational(1));
  const pn::ForwardOptions options;
  const NumberDistribution<Rational> p = number_distribution<Rational>(spec);
  const pn::PNObserved<Rational> observed = pn::pn_forward(p, ref, options);
  const pn::RaggedJoint<Rational> r = pn::pn_retrieve(pn::ragged_observed(observed), ref.nbar);
  const pn::RaggedMinimum minimum = pn::ragged_minimum(r);

  Bundle b;
  add_renderings<Rational>(b, io::to_json(r), io::to_csv(r), io::render_view(r));
  nlohmann::json& m = b.manifest;
  m["schema"] = kManifestSchema;
  m["figure"] = 4;
  m["scheme"] = "pn";
  m["state"] = to_string(spec);
  m["reference_nbar"] = format_rational(ref.nbar);
  m["m_definition"] = pn::to_string(r.mdef);
  m["mode"] = to_string(ScalarMode::rational);
  m["precision"] = "exact rational; values are stored * e^exp_weight";
  m["cutoff"] = observed.cutoff;
  m["mass_deficit"] = observed.mass_deficit;
  m["mass_tolerance"] = options.tolerance;
  m["converged"] = true;
  m["nonclassical"] = minimum.nonclassical;
  m["minimum"] = {{"N", minimum.total},
                  {"m", rational_string(minimum.m)},
                  {"value", rational_string(r.stored(minimum.total, minimum.m))},
                  {"exp_weight", rational_string(r.exp_weight)}};
  return b;
}

}  // namespace

Bundle reproduce(int figure) {
  Bundle b;
  switch (figure) {
    case 1: b = number_number_figure<Rational>(1, "fock:7", 7); break;
    case 2: b = number_number_figure<Rational>(2, "pats:k=1,nbar=1", 10); break;
    case 3: b = number_number_figure<Tracked>(3, "sqvac:r=0.3", 10); break;
    case 4: b = phase_number_figure(); break;
    default: throw std::invalid_argument("figure must be 1, 2, 3 or 4");
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, content] : b.files) files.push_back(name);
  files.push_back("manifest.json");
  b.manifest["files"] = files;
  b.files["manifest.json"] = b.manifest.dump(2) + "\n";
  return b;
}

}  // namespace qjoint
