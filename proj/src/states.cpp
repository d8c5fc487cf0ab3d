#include "qjoint/states.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qjoint {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// "k=1,nbar=1" -> {k: 1, nbar: 1}; a bare value is stored under `positional`.
std::map<std::string, std::string> parse_params(const std::string& body,
                                                const std::string& positional) {
  std::map<std::string, std::string> params;
  if (trim(body).empty()) return params;
  for (const auto& part : split(body, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      if (!params.emplace(positional, part).second) {
        throw ParseError("duplicate parameter in '" + body + "'");
      }
    } else if (!params.emplace(trim(part.substr(0, eq)), trim(part.substr(eq + 1))).second) {
      throw ParseError("duplicate parameter in '" + body + "'");
    }
  }
  return params;
}

Rational take_rational(std::map<std::string, std::string>& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw ParseError("missing parameter '" + key + "'");
  Rational value;
  try {
    value = parse_rational(it->second);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("parameter '") + key + "': " + e.what());
  }
  params.erase(it);
  if (value < 0) throw ParseError("parameter '" + key + "' must be non-negative");
  return value;
}

unsigned take_count(std::map<std::string, std::string>& params, const std::string& key) {
  const Rational value = take_rational(params, key);
  if (denominator(value) != 1 || value > 100000) {
    throw ParseError("parameter '" + key + "' must be a non-negative integer");
  }
  return numerator(value).convert_to<unsigned>();
}

void expect_empty(const std::map<std::string, std::string>& params, const std::string& kind) {
  if (!params.empty()) {
    throw ParseError("unknown parameter '" + params.begin()->first + "' for " + kind);
  }
}

std::vector<Rational> read_probability_list(const std::string& body) {
  std::vector<Rational> probs;
  for (const auto& item : split(body, ',')) probs.push_back(parse_rational(item));
  return probs;
}

// One probability per line, either "p" or "n,p"; '#' starts a comment.
std::vector<Rational> read_probability_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open custom distribution file '" + path + "'");
  std::vector<Rational> probs;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    try {
      if (fields.size() == 1) {
        probs.push_back(parse_rational(fields[0]));
      } else if (fields.size() == 2) {
        const Rational n = parse_rational(fields[0]);
        if (n != static_cast<long>(probs.size())) {
          throw ParseError("custom distribution rows must be listed in order n = 0, 1, ...");
        }
        probs.push_back(parse_rational(fields[1]));
      } else {
        throw ParseError("bad line in '" + path + "': " + line);
      }
    } catch (const std::invalid_argument&) {
      if (probs.empty() && fields.size() == 2) continue;  // header row
      throw ParseError("bad line in '" + path + "': " + line);
    }
  }
  return probs;
}

}  // namespace

StateSpec parse_state_spec(const std::string& raw) {
  const std::string text = trim(raw);
  const auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::transform(kind.begin(), kind.end(), kind.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);

  if (kind == "vacuum") {
    if (!trim(body).empty()) throw ParseError("vacuum takes no parameters");
    return Fock{0};
  }
  if (kind == "custom") {
    const std::string b = trim(body);
    if (b.empty()) throw ParseError("custom needs a probability list or @file");
    Custom c;
    try {
      if (b.front() == '@') {
        c.source = b;
        c.probs = read_probability_file(b.substr(1));
      } else {
        c.probs = read_probability_list(b);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("custom distribution: ") + e.what());
    }
    if (c.probs.empty()) throw ParseError("custom distribution is empty");
    for (const auto& p : c.probs) {
      if (p < 0) throw ParseError("custom distribution has a negative entry");
    }
    return c;
  }

  if (kind == "fock") {
    auto params = parse_params(body, "n");
    Fock f{take_count(params, "n")};
    expect_empty(params, kind);
    return f;
  }
  if (kind == "coherent") {
    auto params = parse_params(body, "nbar");
    Coherent c{take_rational(params, "nbar")};
    expect_empty(params, kind);
    return c;
  }
  if (kind == "thermal") {
    auto params = parse_params(body, "nbar");
    Thermal t{take_rational(params, "nbar")};
    expect_empty(params, kind);
    return t;
  }
  if (kind == "pats") {
    auto params = parse_params(body, "nbar");
    PhotonAddedThermal p;
    p.k = take_count(params, "k");
    p.nbar = take_rational(params, "nbar");
    expect_empty(params, kind);
    return p;
  }
  if (kind == "sqvac") {
    auto params = parse_params(body, "r");
    SqueezedVacuum s{take_rational(params, "r")};
    expect_empty(params, kind);
    return s;
  }
  throw ParseError("unknown state kind '" + kind + "'");
}

std::string to_string(const StateSpec& spec) {
  struct Printer {
    std::string operator()(const Fock& f) const { return "fock:" + std::to_string(f.n); }
    std::string operator()(const Coherent& c) const {
      return "coherent:nbar=" + format_rational(c.nbar);
    }
    std::string operator()(const Thermal& t) const {
      return "thermal:nbar=" + format_rational(t.nbar);
    }
    std::string operator()(const PhotonAddedThermal& p) const {
      return "pats:k=" + std::to_string(p.k) + ",nbar=" + format_rational(p.nbar);
    }
    std::string operator()(const SqueezedVacuum& s) const {
      return "sqvac:r=" + format_rational(s.r);
    }
    std::string operator()(const Custom& c) const {
      if (!c.source.empty()) return "custom:" + c.source;
      std::string out = "custom:";
      for (std::size_t i = 0; i < c.probs.size(); ++i) {
        if (i != 0) out += ',';
        out += format_rational(c.probs[i]);
      }
      return out;
    }
  };
  return std::visit(Printer{}, spec);
}

bool has_rational_distribution(const StateSpec& spec) {
  if (const auto* c = std::get_if<Coherent>(&spec)) return c->nbar == 0;
  if (const auto* s = std::get_if<SqueezedVacuum>(&spec)) return s->r == 0;
  return true;
}

ScalarMode default_mode(const StateSpec& spec) {
  return has_rational_distribution(spec) ? ScalarMode::rational : ScalarMode::tracked;
}

// ---------------------------------------------------------------------------

Rational GeometricMixture::value(unsigned j) const {
  Rational total(0);
  const Rational power = pow_int<Rational>(ratio, j);
  for (unsigned a = 0; a < coeffs.size(); ++a) {
    if (coeffs[a] != 0) total += coeffs[a] * Rational(binomial_integer(j, a)) * power;
  }
  return total;
}

Rational GeometricMixture::weighted_sum(unsigned m, const Rational& x) const {
  Rational total(0);
  for (unsigned a = 0; a < coeffs.size(); ++a) {
    if (coeffs[a] != 0) total += coeffs[a] * binomial_geometric_sum(m, a, x * ratio);
  }
  return total;
}

GeometricMixture GeometricMixture::thinned() const {
  if (ratio == 0) throw std::domain_error("thinning needs a non-zero geometric ratio");
  const Rational half(1, 2);
  const Rational y = ratio * half;
  GeometricMixture out;
  out.ratio = y / (1 - y);
  // p~(n) / ratio'^n is a polynomial of degree coeffs.size()-1 in n; its
  // forward differences at 0 are the coefficients on the C(n, b) basis.
  const std::size_t degree = coeffs.size() - 1;
  std::vector<Rational> f(degree + 1);
  for (unsigned n = 0; n <= degree; ++n) {
    f[n] = weighted_sum(n, half) / pow_int<Rational>(out.ratio, n);
  }
  out.coeffs.resize(degree + 1);
  for (std::size_t b = 0; b <= degree; ++b) {
    out.coeffs[b] = f[0];
    for (std::size_t i = 0; i + 1 < f.size() - b; ++i) f[i] = f[i + 1] - f[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <ScalarType S>
double upper(const S& x) {
  return (std::abs(to_double(x)) + error_bound(x)) * (1.0 + 4.0 * kUnitRoundoff);
}

double geometric_tail(double anchor, double ratio) {
  if (anchor == 0.0) return 0.0;
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return anchor * ratio / (1.0 - ratio) * (1.0 + 1e-12);
}

struct Envelope {
  double anchor;
  double ratio;
};

// Grows the distribution term by term until the certified tail drops below
// `auto_tail` (or to the requested cutoff).
template <ScalarType S>
NumberDistribution<S> build_infinite(const std::function<S(unsigned, const std::vector<S>&)>& next,
                                     const std::function<Envelope(unsigned, const std::vector<S>&)>& envelope,
                                     unsigned min_cutoff, const DistributionOptions& options) {
  constexpr unsigned kMaxCutoff = 20000;
  NumberDistribution<S> d;
  const unsigned target = options.cutoff.value_or(kMaxCutoff);
  for (unsigned j = 0;; ++j) {
    d.probs.push_back(next(j, d.probs));
    const bool at_target = j == target;
    if (options.cutoff && !at_target) continue;
    const Envelope env = j >= min_cutoff || options.cutoff
                             ? envelope(j, d.probs)
                             : Envelope{std::numeric_limits<double>::infinity(), 1.0};
    const double tail = geometric_tail(env.anchor, env.ratio);
    if (at_target || tail < options.auto_tail) {
      d.cutoff = j;
      d.tail_anchor = env.anchor;
      d.tail_ratio = env.ratio;
      d.tail_bound = tail;
      break;
    }
  }
  return d;
}

template <ScalarType S>
NumberDistribution<S> finite(std::vector<Rational> probs, const DistributionOptions& options) {
  NumberDistribution<S> d;
  const unsigned support = static_cast<unsigned>(probs.size()) - 1;
  d.cutoff = options.cutoff.value_or(support);
  Rational beyond(0);
  for (unsigned n = d.cutoff + 1; n <= support; ++n) beyond += probs[n];
  probs.resize(d.cutoff + 1, Rational(0));
  for (const auto& p : probs) d.probs.push_back(from_rational<S>(p));
  if (beyond != 0) {
    d.tail_bound = upper(beyond);
    d.tail_anchor = std::numeric_limits<double>::infinity();
    d.tail_ratio = 1.0;
  }
  double mean = 0.0;
  for (unsigned n = 0; n <= d.cutoff; ++n) mean += n * to_double(probs[n]);
  d.mean = mean;
  return d;
}

NumberDistribution<Rational> thermal_family(unsigned k, const Rational& nbar,
                                            const DistributionOptions& options) {
  const Rational q = nbar / (nbar + 1);
  GeometricMixture mix;
  mix.ratio = q;
  mix.coeffs.assign(k + 1, Rational(0));
  mix.coeffs[k] = pow_int<Rational>(1 - q, k + 1) / pow_int<Rational>(q, k);

  const double ratio_q = to_double(q);
  auto next = [&](unsigned j, const std::vector<Rational>&) { return mix.value(j); };
  auto envelope = [&](unsigned cutoff, const std::vector<Rational>& probs) {
    if (cutoff < k) return Envelope{std::numeric_limits<double>::infinity(), 1.0};
    const double r = ratio_q * (cutoff + 1.0) / (cutoff + 1.0 - k) * (1.0 + 4.0 * kUnitRoundoff);
    return Envelope{upper(probs[cutoff]), r};
  };
  auto d = build_infinite<Rational>(next, envelope, k, options);
  // Exact complement is the true tail mass; keep whichever bound is tighter.
  Rational stored(0);
  for (const auto& p : d.probs) stored += p;
  d.tail_bound = std::min(d.tail_bound, upper(Rational(1 - stored)));
  d.mean = to_double(Rational(k + (k + 1) * nbar));
  d.analytic = mix;
  return d;
}

NumberDistribution<Tracked> coherent_tracked(const Rational& nbar,
                                             const DistributionOptions& options) {
  const Tracked mean = scalar_traits<Tracked>::from_rational(nbar);
  const unsigned min_cutoff = static_cast<unsigned>(std::ceil(mean.value));
  auto next = [&](unsigned j, const std::vector<Tracked>& probs) {
    return j == 0 ? exp(-mean) : probs[j - 1] * mean / Tracked(static_cast<double>(j));
  };
  auto envelope = [&](unsigned cutoff, const std::vector<Tracked>& probs) {
    return Envelope{upper(probs[cutoff]), upper(mean) / (cutoff + 1.0)};
  };
  auto d = build_infinite<Tracked>(next, envelope, min_cutoff, options);
  d.mean = mean.value;
  return d;
}

NumberDistribution<Tracked> squeezed_tracked(const Rational& r_exact,
                                             const DistributionOptions& options) {
  const double r = to_double(r_exact);
  const Tracked t(std::tanh(r), 2.0 * kUnitRoundoff * std::tanh(r));
  const Tracked cosh_r(std::cosh(r), 2.0 * kUnitRoundoff * std::cosh(r));
  const Tracked t2 = t * t;
  auto next = [&](unsigned j, const std::vector<Tracked>& probs) {
    if (j == 0) return Tracked(1.0) / cosh_r;
    if (j % 2 == 1) return Tracked(0.0);
    return probs[j - 2] * t2 * Tracked(j - 1.0) / Tracked(static_cast<double>(j));
  };
  auto envelope = [&](unsigned cutoff, const std::vector<Tracked>& probs) {
    const double ratio = upper(t);
    if (cutoff % 2 == 0) return Envelope{upper(probs[cutoff]), ratio};
    return Envelope{upper(probs[cutoff - 1]) * ratio, ratio};
  };
  auto d = build_infinite<Tracked>(next, envelope, 1, options);
  d.mean = std::sinh(r) * std::sinh(r);
  return d;
}

template <ScalarType S>
void check_ceiling(const NumberDistribution<S>& d, const DistributionOptions& options) {
  if (d.tail_bound > options.tail_ceiling) {
    throw CutoffTooSmall("cutoff " + std::to_string(d.cutoff) + " leaves tail mass bound " +
                         std::to_string(d.tail_bound) + " above ceiling " +
                         std::to_string(options.tail_ceiling));
  }
}

}  // namespace

NumberDistribution<Tracked> to_tracked(const NumberDistribution<Rational>& d) {
  NumberDistribution<Tracked> out;
  out.cutoff = d.cutoff;
  out.tail_bound = d.tail_bound;
  out.tail_anchor = d.tail_anchor;
  out.tail_ratio = d.tail_ratio;
  out.mean = d.mean;
  out.analytic = d.analytic;
  out.probs.reserve(d.probs.size());
  for (const auto& p : d.probs) out.probs.push_back(from_rational<Tracked>(p));
  return out;
}

template <ScalarType S>
NumberDistribution<S> number_distribution(const StateSpec& spec,
                                          const DistributionOptions& options) {
  NumberDistribution<S> d;
  if (const auto* f = std::get_if<Fock>(&spec)) {
    std::vector<Rational> probs(f->n + 1, Rational(0));
    probs[f->n] = 1;
    d = finite<S>(std::move(probs), options);
  } else if (const auto* c = std::get_if<Custom>(&spec)) {
    d = finite<S>(c->probs, options);
  } else if (const auto* t = std::get_if<Thermal>(&spec)) {
    return number_distribution<S>(t->nbar == 0 ? StateSpec{Fock{0}}
                                                : StateSpec{PhotonAddedThermal{0, t->nbar}},
                                  options);
  } else if (const auto* p = std::get_if<PhotonAddedThermal>(&spec)) {
    if (p->nbar == 0) return number_distribution<S>(Fock{p->k}, options);
    auto exact = thermal_family(p->k, p->nbar, options);
    if constexpr (std::is_same_v<S, Rational>) {
      d = std::move(exact);
    } else {
      d = to_tracked(exact);
    }
  } else if (const auto* coh = std::get_if<Coherent>(&spec)) {
    if (coh->nbar == 0) return number_distribution<S>(Fock{0}, options);
    if constexpr (std::is_same_v<S, Rational>) {
      throw UnsupportedState("coherent state probabilities are irrational; use float mode");
    } else {
      d = coherent_tracked(coh->nbar, options);
    }
  } else if (const auto* sq = std::get_if<SqueezedVacuum>(&spec)) {
    if (sq->r == 0) return number_distribution<S>(Fock{0}, options);
    if constexpr (std::is_same_v<S, Rational>) {
      throw UnsupportedState("squeezed vacuum probabilities are irrational; use float mode");
    } else {
      d = squeezed_tracked(sq->r, options);
    }
  }
  check_ceiling(d, options);
  return d;
}

template NumberDistribution<Rational> number_distribution(const StateSpec&,
                                                          const DistributionOptions&);
template NumberDistribution<Tracked> number_distribution(const StateSpec&,
                                                         const DistributionOptions&);

BlochState::BlochState(const Eigen::Vector3d& s) : s_(s) {
  if (!s.allFinite() || s.squaredNorm() > 1.0 + 1e-12) {
    throw std::invalid_argument("Bloch vector must satisfy |s| <= 1");
  }
}

}  // namespace qjoint
