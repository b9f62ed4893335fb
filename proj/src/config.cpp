#include "fracpf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "fracpf/analysis.hpp"
#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ValidationError(fmt::format("config key '{}': {}", key, what));
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& prefix, const char* key) {
  const json* v = find(obj, key);
  if (!v) fail(join(prefix, key), "missing required key");
  return *v;
}

void require_object(const json& obj, const std::string& key) {
  if (!obj.is_object()) fail(key.empty() ? "<root>" : key, fmt::format("expected an object, got {}", obj.type_name()));
}

// Unknown keys are rejected so that typos cannot silently fall back to defaults.
void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return it.key() == a; });
    if (!known) fail(join(prefix, it.key()), "unknown key");
  }
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, fmt::format("expected a number, got {}", v.type_name()));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

long long as_integer(const json& v, const std::string& key) {
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  if (!v.is_number_integer()) fail(key, fmt::format("expected an integer, got {}", v.type_name()));
  return v.get<long long>();
}

int as_int(const json& v, const std::string& key, long long lo) {
  const long long x = as_integer(v, key);
  if (x < lo || x > std::numeric_limits<int>::max()) fail(key, fmt::format("must be an integer >= {} (got {})", lo, x));
  return static_cast<int>(x);
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) fail(key, fmt::format("expected a string, got {}", v.type_name()));
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) fail(key, fmt::format("expected true or false, got {}", v.type_name()));
  return v.get<bool>();
}

std::vector<double> as_numbers(const json& v, const std::string& key) {
  if (v.is_number()) return {as_number(v, key)};
  if (!v.is_array()) fail(key, fmt::format("expected an array of numbers, got {}", v.type_name()));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], fmt::format("{}[{}]", key, i)));
  return out;
}

void require_positive(double x, const std::string& key) {
  if (!(x > 0.0)) fail(key, fmt::format("must be > 0 (got {})", x));
}

double number_or(const json& obj, const std::string& prefix, const char* key, double fallback) {
  const json* v = find(obj, key);
  return v ? as_number(*v, join(prefix, key)) : fallback;
}

template <class Parse, class T>
T read_or(const json& obj, const char* key, T fallback, Parse parse) {
  const json* v = find(obj, key);
  return v ? parse(*v) : fallback;
}

// ---- geometry -------------------------------------------------------------

GeometrySpec parse_geometry(const json& g, const std::string& key) {
  require_object(g, key);
  check_keys(g, key, {"kind", "extent", "n_modes", "m_grid"});
  GeometrySpec spec;
  const std::string kind_key = join(key, "kind");
  try {
    spec.kind = basis_kind_from_string(as_string(require(g, key, "kind"), kind_key));
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind("config key", 0) == 0) throw;
    fail(kind_key, e.what());
  }
  const int dim = dimension(spec.kind);
  if (const json* e = find(g, "extent")) {
    spec.extent = as_numbers(*e, join(key, "extent"));
  } else {
    spec.extent.assign(dim, 1.0);
  }
  if (static_cast<int>(spec.extent.size()) != dim) {
    fail(join(key, "extent"), fmt::format("needs {} value(s) for kind {}, got {}", dim,
                                          to_string(spec.kind), spec.extent.size()));
  }
  for (double L : spec.extent) require_positive(L, join(key, "extent"));
  spec.n_modes = as_int(require(g, key, "n_modes"), join(key, "n_modes"), 1);
  spec.m_grid = read_or(g, "m_grid", 0, [&](const json& v) { return as_int(v, join(key, "m_grid"), 2); });
  return spec;
}

int default_grid(const GeometrySpec& a, const GeometrySpec& b) {
  const int n = std::max(a.n_modes, b.n_modes);
  return dimension(a.kind) == 1 ? 8 * n : 4 * n;
}

// ---- potential ------------------------------------------------------------

PotentialSpec parse_potential(const json& p) {
  require_object(p, "potential");
  check_keys(p, "potential", {"kind", "gamma", "c1", "c2", "tables"});
  PotentialSpec spec;
  try {
    spec.kind = potential_kind_from_string(as_string(require(p, "potential", "kind"), "potential.kind"));
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind("config key", 0) == 0) throw;
    fail("potential.kind", e.what());
  }
  switch (spec.kind) {
    case PotentialKind::Regular:
      spec.gamma = number_or(p, "potential", "gamma", 1.0);
      if (!(spec.gamma >= 0.0)) fail("potential.gamma", fmt::format("must be >= 0 (got {})", spec.gamma));
      break;
    case PotentialKind::Logarithmic:
      spec.c1 = as_number(require(p, "potential", "c1"), "potential.c1");
      if (!(spec.c1 > 1.0)) fail("potential.c1", fmt::format("must be > 1 (got {})", spec.c1));
      break;
    case PotentialKind::DoubleObstacle:
      spec.c2 = as_number(require(p, "potential", "c2"), "potential.c2");
      require_positive(spec.c2, "potential.c2");
      break;
    case PotentialKind::Custom: {
      const json& t = require(p, "potential", "tables");
      require_object(t, "potential.tables");
      check_keys(t, "potential.tables", {"nodes", "beta_min", "pi", "beta_hat"});
      spec.tables.nodes = as_numbers(require(t, "potential.tables", "nodes"), "potential.tables.nodes");
      spec.tables.beta_min = as_numbers(require(t, "potential.tables", "beta_min"), "potential.tables.beta_min");
      spec.tables.pi = as_numbers(require(t, "potential.tables", "pi"), "potential.tables.pi");
      if (const json* bh = find(t, "beta_hat")) spec.tables.beta_hat = as_numbers(*bh, "potential.tables.beta_hat");
      break;
    }
  }
  try {
    (void)build_potential(spec);
  } catch (const ValidationError& e) {
    fail("potential", e.what());
  }
  return spec;
}

json potential_to_json(const PotentialSpec& spec) {
  json p = {{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case PotentialKind::Regular: p["gamma"] = spec.gamma; break;
    case PotentialKind::Logarithmic: p["c1"] = spec.c1; break;
    case PotentialKind::DoubleObstacle: p["c2"] = spec.c2; break;
    case PotentialKind::Custom: {
      json t = {{"nodes", spec.tables.nodes}, {"beta_min", spec.tables.beta_min}, {"pi", spec.tables.pi}};
      if (!spec.tables.beta_hat.empty()) t["beta_hat"] = spec.tables.beta_hat;
      p["tables"] = t;
      break;
    }
  }
  return p;
}

// ---- coupling -------------------------------------------------------------

Coupling parse_coupling(const json& c) {
  if (c.is_number()) return Coupling::constant(as_number(c, "coupling"));
  require_object(c, "coupling");
  const std::string kind = read_or(c, "kind", std::string("constant"),
                                   [](const json& v) { return as_string(v, "coupling.kind"); });
  if (kind == "constant") {
    check_keys(c, "coupling", {"kind", "value"});
    return Coupling::constant(as_number(require(c, "coupling", "value"), "coupling.value"));
  }
  if (kind == "tanh") {
    check_keys(c, "coupling", {"kind", "base", "amplitude", "scale"});
    return Coupling::tanh(number_or(c, "coupling", "base", 0.0),
                          as_number(require(c, "coupling", "amplitude"), "coupling.amplitude"),
                          number_or(c, "coupling", "scale", 1.0));
  }
  fail("coupling.kind", fmt::format("unknown coupling kind '{}' (expected constant or tanh)", kind));
}

json coupling_to_json(const Coupling& c) {
  if (c.is_constant()) return {{"kind", "constant"}, {"value", c.value}};
  return {{"kind", "tanh"}, {"base", c.base}, {"amplitude", c.amplitude}, {"scale", c.scale}};
}

// ---- data fields ----------------------------------------------------------

std::array<int, 2> parse_modes(const json& v, const std::string& key) {
  if (v.is_number()) return {as_int(v, key, 0), 0};
  if (!v.is_array() || v.empty() || v.size() > 2) fail(key, "expected an integer or a list of one or two integers");
  std::array<int, 2> m{0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = as_int(v[i], fmt::format("{}[{}]", key, i), 0);
  return m;
}

ExprTerm parse_term(const json& t, const std::string& key) {
  require_object(t, key);
  check_keys(t, key, {"shape", "amplitude", "modes", "center", "width", "decay"});
  ExprTerm term;
  try {
    term.shape = expr_shape_from_string(as_string(require(t, key, "shape"), join(key, "shape")));
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind("config key", 0) == 0) throw;
    fail(join(key, "shape"), fmt::format("{} (expected const, cos, sin or gaussian)", e.what()));
  }
  term.amplitude = number_or(t, key, "amplitude", 1.0);
  if (const json* m = find(t, "modes")) term.modes = parse_modes(*m, join(key, "modes"));
  if (const json* c = find(t, "center")) {
    const auto center = as_numbers(*c, join(key, "center"));
    if (center.empty() || center.size() > 2) fail(join(key, "center"), "expected one or two coordinates");
    for (std::size_t i = 0; i < center.size(); ++i) term.center[i] = center[i];
  }
  term.width = number_or(t, key, "width", 1.0);
  term.decay = number_or(t, key, "decay", 0.0);
  if (term.shape == ExprTerm::Shape::Gaussian) require_positive(term.width, join(key, "width"));
  return term;
}

SpaceTimeField parse_field(const json& f, const std::string& key, int n_grid) {
  if (f.is_number()) {
    ExprTerm c;
    c.amplitude = as_number(f, key);
    return SpaceTimeField::expression({c});
  }
  require_object(f, key);
  if (const json* terms = find(f, "terms")) {
    check_keys(f, key, {"terms"});
    if (!terms->is_array()) fail(join(key, "terms"), "expected an array of terms");
    std::vector<ExprTerm> out;
    for (std::size_t i = 0; i < terms->size(); ++i) {
      out.push_back(parse_term((*terms)[i], fmt::format("{}.terms[{}]", key, i)));
    }
    return SpaceTimeField::expression(std::move(out));
  }
  check_keys(f, key, {"times", "values"});
  const json& values = require(f, key, "values");
  if (!values.is_array() || values.empty()) fail(join(key, "values"), "expected a non-empty array");
  auto row = [&](const json& v, const std::string& k) {
    const auto xs = as_numbers(v, k);
    if (static_cast<int>(xs.size()) != n_grid) {
      fail(k, fmt::format("has {} values but the quadrature grid has {} nodes", xs.size(), n_grid));
    }
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(xs.data(), n_grid));
  };
  const json* times = find(f, "times");
  if (!times) return SpaceTimeField::grid_values(row(values, join(key, "values")));
  const auto ts = as_numbers(*times, join(key, "times"));
  if (ts.size() != values.size()) fail(join(key, "times"), "must have one entry per row of values");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (!(ts[i] > ts[i - 1])) fail(join(key, "times"), "must be strictly increasing");
  }
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back(row(values[i], fmt::format("{}.values[{}]", key, i)));
  return SpaceTimeField::table(ts, std::move(rows));
}

json field_to_json(const SpaceTimeField& f) {
  if (f.is_tabulated()) {
    json rows = json::array();
    for (const auto& v : f.table_values()) rows.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return {{"times", f.table_times()}, {"values", rows}};
  }
  json terms = json::array();
  for (const auto& t : f.terms()) {
    terms.push_back({{"shape", to_string(t.shape)},
                     {"amplitude", t.amplitude},
                     {"modes", {t.modes[0], t.modes[1]}},
                     {"center", {t.center[0], t.center[1]}},
                     {"width", t.width},
                     {"decay", t.decay}});
  }
  return {{"terms", terms}};
}

// ---- scheme and study -----------------------------------------------------

RunSpec parse_scheme(const json& s) {
  require_object(s, "scheme");
  check_keys(s, "scheme", {"scheme", "dt", "T", "snapshot_stride", "fixed_point_tol", "max_inner_iters",
                           "grid_output"});
  RunSpec spec;
  if (const json* name = find(s, "scheme")) {
    try {
      spec.scheme.scheme = scheme_from_string(as_string(*name, "scheme.scheme"));
    } catch (const ValidationError& e) {
      if (std::string(e.what()).rfind("config key", 0) == 0) throw;
      fail("scheme.scheme", e.what());
    }
  }
  spec.scheme.dt = as_number(require(s, "scheme", "dt"), "scheme.dt");
  require_positive(spec.scheme.dt, "scheme.dt");
  spec.final_time = as_number(require(s, "scheme", "T"), "scheme.T");
  require_positive(spec.final_time, "scheme.T");
  const double steps = spec.final_time / spec.scheme.dt;
  if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps)) {
    fail("scheme.T", fmt::format("must be an integer multiple of scheme.dt (T/dt = {})", steps));
  }
  spec.snapshot_stride = read_or(s, "snapshot_stride", 1,
                                 [](const json& v) { return as_int(v, "scheme.snapshot_stride", 1); });
  spec.scheme.fixed_point_tol = number_or(s, "scheme", "fixed_point_tol", 1e-10);
  require_positive(spec.scheme.fixed_point_tol, "scheme.fixed_point_tol");
  spec.scheme.max_inner_iters = read_or(s, "max_inner_iters", 50,
                                        [](const json& v) { return as_int(v, "scheme.max_inner_iters", 1); });
  spec.grid_output = read_or(s, "grid_output", false, [](const json& v) { return as_bool(v, "scheme.grid_output"); });
  return spec;
}

std::vector<double> positive_list(const json& v, const std::string& key) {
  auto xs = as_numbers(v, key);
  for (double x : xs) require_positive(x, key);
  return xs;
}

StudySpec parse_study(const json& s) {
  require_object(s, "study");
  check_keys(s, "study", {"axis", "values", "reference", "perturb_field", "perturb_mode", "scales", "spread_tol",
                          "tail_fraction", "tail_tol", "residual_tol", "theta_tol", "coercivity_range", "sigmas",
                          "vector", "hpqo_samples", "hpqo_amplitude"});
  StudySpec spec;
  if (const json* v = find(s, "axis")) {
    spec.axis = as_string(*v, "study.axis");
    try {
      (void)study_axis_from_string(spec.axis);
    } catch (const ValidationError& e) {
      fail("study.axis", e.what());
    }
  }
  if (const json* v = find(s, "values")) spec.values = positive_list(*v, "study.values");
  if (const json* v = find(s, "reference")) {
    spec.reference = as_string(*v, "study.reference");
    try {
      (void)reference_policy_from_string(spec.reference);
    } catch (const ValidationError& e) {
      fail("study.reference", e.what());
    }
  }
  if (const json* v = find(s, "perturb_field")) {
    spec.perturb_field = as_string(*v, "study.perturb_field");
    if (spec.perturb_field != "theta0" && spec.perturb_field != "phi0" && spec.perturb_field != "f") {
      fail("study.perturb_field", fmt::format("must be theta0, phi0 or f (got '{}')", spec.perturb_field));
    }
  }
  spec.perturb_mode = read_or(s, "perturb_mode", 1, [](const json& v) { return as_int(v, "study.perturb_mode", 0); });
  if (const json* v = find(s, "scales")) {
    spec.scales = as_numbers(*v, "study.scales");
    for (double x : spec.scales) {
      if (x == 0.0) fail("study.scales", "entries must be nonzero");
    }
  }
  spec.spread_tol = number_or(s, "study", "spread_tol", spec.spread_tol);
  require_positive(spec.spread_tol, "study.spread_tol");
  spec.tail_fraction = number_or(s, "study", "tail_fraction", spec.tail_fraction);
  if (!(spec.tail_fraction > 0.0 && spec.tail_fraction <= 1.0)) {
    fail("study.tail_fraction", fmt::format("must lie in (0, 1] (got {})", spec.tail_fraction));
  }
  spec.tail_tol = number_or(s, "study", "tail_tol", spec.tail_tol);
  require_positive(spec.tail_tol, "study.tail_tol");
  spec.residual_tol = number_or(s, "study", "residual_tol", spec.residual_tol);
  require_positive(spec.residual_tol, "study.residual_tol");
  spec.theta_tol = number_or(s, "study", "theta_tol", spec.theta_tol);
  require_positive(spec.theta_tol, "study.theta_tol");
  spec.coercivity_range = number_or(s, "study", "coercivity_range", spec.coercivity_range);
  require_positive(spec.coercivity_range, "study.coercivity_range");
  if (const json* v = find(s, "sigmas")) spec.sigmas = positive_list(*v, "study.sigmas");
  if (const json* v = find(s, "vector")) spec.vector = as_numbers(*v, "study.vector");
  spec.hpqo_samples = read_or(s, "hpqo_samples", spec.hpqo_samples,
                              [](const json& v) { return as_int(v, "study.hpqo_samples", 0); });
  spec.hpqo_amplitude = number_or(s, "study", "hpqo_amplitude", spec.hpqo_amplitude);
  require_positive(spec.hpqo_amplitude, "study.hpqo_amplitude");
  return spec;
}

json study_to_json(const StudySpec& s) {
  return {{"axis", s.axis},
          {"values", s.values},
          {"reference", s.reference},
          {"perturb_field", s.perturb_field},
          {"perturb_mode", s.perturb_mode},
          {"scales", s.scales},
          {"spread_tol", s.spread_tol},
          {"tail_fraction", s.tail_fraction},
          {"tail_tol", s.tail_tol},
          {"residual_tol", s.residual_tol},
          {"theta_tol", s.theta_tol},
          {"coercivity_range", s.coercivity_range},
          {"sigmas", s.sigmas},
          {"vector", s.vector},
          {"hpqo_samples", s.hpqo_samples},
          {"hpqo_amplitude", s.hpqo_amplitude}};
}

json geometry_to_json(const GeometrySpec& g) {
  return {{"kind", to_string(g.kind)}, {"extent", g.extent}, {"n_modes", g.n_modes}, {"m_grid", g.m_grid}};
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  require_object(doc, "");
  check_keys(doc, "", {"geometry", "exponents", "potential", "eps", "coupling", "data", "scheme", "study", "output",
                       "seed"});
  RunConfig cfg;

  const json& geo = require(doc, "", "geometry");
  require_object(geo, "geometry");
  check_keys(geo, "geometry", {"A", "B"});
  cfg.geometry_a = parse_geometry(require(geo, "geometry", "A"), "geometry.A");
  cfg.geometry_b = parse_geometry(require(geo, "geometry", "B"), "geometry.B");
  auto& a = cfg.geometry_a;
  auto& b = cfg.geometry_b;
  if (dimension(a.kind) != dimension(b.kind)) fail("geometry.B.kind", "must have the same dimension as geometry.A.kind");
  if (a.extent != b.extent) fail("geometry.B.extent", "must equal geometry.A.extent (shared domain)");
  if (a.m_grid == 0 && b.m_grid == 0) a.m_grid = b.m_grid = default_grid(a, b);
  if (a.m_grid == 0) a.m_grid = b.m_grid;
  if (b.m_grid == 0) b.m_grid = a.m_grid;
  if (a.m_grid != b.m_grid) fail("geometry.B.m_grid", "must equal geometry.A.m_grid (shared quadrature grid)");
  for (const auto* g : {&a, &b}) {
    const std::string key = g == &a ? "geometry.A" : "geometry.B";
    if (g->m_grid < 4 * g->n_modes) {
      fail(key + ".m_grid", fmt::format("must be >= 4 * n_modes = {} (got {})", 4 * g->n_modes, g->m_grid));
    }
  }

  const json& ex = require(doc, "", "exponents");
  require_object(ex, "exponents");
  check_keys(ex, "exponents", {"r", "sigma"});
  cfg.r = as_number(require(ex, "exponents", "r"), "exponents.r");
  require_positive(cfg.r, "exponents.r");
  cfg.sigma = as_number(require(ex, "exponents", "sigma"), "exponents.sigma");
  require_positive(cfg.sigma, "exponents.sigma");

  cfg.potential = parse_potential(require(doc, "", "potential"));
  cfg.eps = as_number(require(doc, "", "eps"), "eps");
  require_positive(cfg.eps, "eps");

  if (const json* c = find(doc, "coupling")) cfg.coupling = parse_coupling(*c);

  int n_grid = a.m_grid;
  if (dimension(a.kind) == 2) n_grid *= a.m_grid;
  if (const json* d = find(doc, "data")) {
    require_object(*d, "data");
    check_keys(*d, "data", {"theta0", "phi0", "f"});
    if (const json* v = find(*d, "theta0")) cfg.theta0 = parse_field(*v, "data.theta0", n_grid);
    if (const json* v = find(*d, "phi0")) cfg.phi0 = parse_field(*v, "data.phi0", n_grid);
    if (const json* v = find(*d, "f")) cfg.source = parse_field(*v, "data.f", n_grid);
  }

  cfg.run = parse_scheme(require(doc, "", "scheme"));
  if (const json* s = find(doc, "study")) cfg.study = parse_study(*s);
  if (const json* o = find(doc, "output")) {
    require_object(*o, "output");
    check_keys(*o, "output", {"dir"});
    if (const json* dir = find(*o, "dir")) cfg.output_dir = as_string(*dir, "output.dir");
  }
  if (const json* s = find(doc, "seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
      fail("seed", "expected a nonnegative integer");
    }
    cfg.seed = s->get<std::uint64_t>();
  }

  (void)build_system(cfg);
  return cfg;
}

json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("config file '{}' cannot be opened", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("config_hash")) return doc["config"];
  return doc;
}

RunConfig parse_config(const std::string& path) { return config_from_json(load_config_json(path)); }

json config_to_json(const RunConfig& c) {
  json doc;
  doc["geometry"] = {{"A", geometry_to_json(c.geometry_a)}, {"B", geometry_to_json(c.geometry_b)}};
  doc["exponents"] = {{"r", c.r}, {"sigma", c.sigma}};
  doc["potential"] = potential_to_json(c.potential);
  doc["eps"] = c.eps;
  doc["coupling"] = coupling_to_json(c.coupling);
  doc["data"] = {{"theta0", field_to_json(c.theta0)}, {"phi0", field_to_json(c.phi0)}, {"f", field_to_json(c.source)}};
  doc["scheme"] = {{"scheme", to_string(c.run.scheme.scheme)},
                   {"dt", c.run.scheme.dt},
                   {"T", c.run.final_time},
                   {"snapshot_stride", c.run.snapshot_stride},
                   {"fixed_point_tol", c.run.scheme.fixed_point_tol},
                   {"max_inner_iters", c.run.scheme.max_inner_iters},
                   {"grid_output", c.run.grid_output}};
  doc["study"] = study_to_json(c.study);
  doc["output"] = {{"dir", c.output_dir}};
  doc["seed"] = c.seed;
  return doc;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw SolverError("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string config_hash(const RunConfig& config) {
  json doc = config_to_json(config);
  doc.erase("output");
  return sha256_hex(doc.dump());
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError(fmt::format("override '{}': expected key=value", assignment));
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream parts(path);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ValidationError(fmt::format("override '{}': empty path segment", assignment));
    keys.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) {
      throw ValidationError(fmt::format("override '{}': '{}' is not a section", assignment, keys[i]));
    }
    node = &(*node)[keys[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ValidationError(fmt::format("override '{}': parent is not a section", assignment));
  (*node)[keys.back()] = value;
}

Potential build_potential(const PotentialSpec& spec) {
  switch (spec.kind) {
    case PotentialKind::Regular: return Potential::regular(spec.gamma);
    case PotentialKind::Logarithmic: return Potential::logarithmic(spec.c1);
    case PotentialKind::DoubleObstacle: return Potential::double_obstacle(spec.c2);
    case PotentialKind::Custom: return Potential::custom(spec.tables);
  }
  throw ValidationError("unknown potential kind");
}

std::shared_ptr<const SpectralBasis> build_basis(const GeometrySpec& spec) {
  if (dimension(spec.kind) == 1) {
    return std::make_shared<const SpectralBasis>(
        build_interval_basis(spec.kind, spec.extent.at(0), spec.n_modes, spec.m_grid));
  }
  return std::make_shared<const SpectralBasis>(
      build_rect_basis(spec.kind, spec.extent.at(0), spec.extent.at(1), spec.n_modes, spec.m_grid));
}

ProblemData problem_data(const RunConfig& config) {
  ProblemData data;
  data.theta0 = config.theta0;
  data.phi0 = config.phi0;
  data.source = config.source;
  data.coupling = config.coupling;
  return data;
}

DiscreteSystem build_system(const RunConfig& config) {
  std::shared_ptr<const SpectralBasis> a, b;
  try {
    a = build_basis(config.geometry_a);
  } catch (const ValidationError& e) {
    fail("geometry.A", e.what());
  }
  try {
    b = config.geometry_b.kind == config.geometry_a.kind && config.geometry_b.n_modes == config.geometry_a.n_modes
            ? a
            : build_basis(config.geometry_b);
  } catch (const ValidationError& e) {
    fail("geometry.B", e.what());
  }
  try {
    return assemble(problem_data(config), a, b, config.r, config.sigma, config.eps,
                    build_potential(config.potential));
  } catch (const ValidationError& e) {
    fail("data.phi0", e.what());
  }
}

}  // namespace fracpf
