#pragma once

// Run configuration (strict JSON schema) and artifact writers.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mhs/acceptance.hpp"

namespace mhs {

using Json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mode list entry [n, a, b]: a cos(n phi) + b sin(n phi).
struct TrigTerm {
  int n = 0;
  double a = 0.0, b = 0.0;
};

/// Spherical harmonic coefficient [l, m, re, im].
struct SHTerm {
  int l = 0, m = 0;
  Complex value;
};

struct MapConfig {
  double epsilon = 0.05;
  std::vector<std::pair<int, double>> cos_modes{{2, 1.0}};
  std::vector<std::pair<int, double>> sin_modes;
  bool perturb_inner = true;
};

struct RunConfig {
  std::string domain_type = "annulus";  // annulus | mapped | shell
  double L = 2.0;
  std::optional<MapConfig> map;

  std::optional<int> K, N_r, n_phi, l_max;
  std::optional<RadialSpacing> spacing;

  // 2D perturbations of the reference traces; 3D data itself
  std::vector<TrigTerm> f_inner, f_outer, g;
  std::vector<SHTerm> sh_f_inner, sh_f_outer, sh_g_psi, sh_g_phi;

  SolverConfig solver;
  SurfaceEllipticForm elliptic = SurfaceEllipticForm::curvature;

  Json verify = Json::object();  // suite parameters, validated by the suite

  std::string prefix;
  bool operator_csv = false;
  bool all_modes = false;

  std::string canonical;  // parsed document, key-sorted
  std::uint64_t hash = 0;
  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline void require_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get(const Json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + ": wrong type (" + std::string(j.type_name()) + ")");
  }
}

template <class T>
void read(const Json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj.at(key), where + "." + key);
}

template <class T>
void read(const Json& obj, const char* key, const std::string& where, std::optional<T>& out) {
  if (obj.contains(key)) out = get<T>(obj.at(key), where + "." + key);
}

inline std::vector<TrigTerm> read_trig(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of [n, a, b]");
  std::vector<TrigTerm> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer())
      throw ConfigError(where + ": entries must be [n, a, b] with integer n");
    TrigTerm t{e[0].get<int>(), get<double>(e[1], where), get<double>(e[2], where)};
    if (t.n < 0) throw ConfigError(where + ": mode number must be nonnegative");
    out.push_back(t);
  }
  return out;
}

inline std::vector<SHTerm> read_sh(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of [l, m, re, im]");
  std::vector<SHTerm> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(where + ": entries must be [l, m, re, im] with integer l, m");
    SHTerm t{e[0].get<int>(), e[1].get<int>(), Complex(get<double>(e[2], where), get<double>(e[3], where))};
    if (t.l < 0 || std::abs(t.m) > t.l) throw ConfigError(where + ": need l >= 0 and |m| <= l");
    out.push_back(t);
  }
  return out;
}

inline std::vector<std::pair<int, double>> read_map_modes(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of [n, weight]");
  std::vector<std::pair<int, double>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer())
      throw ConfigError(where + ": entries must be [n, weight] with integer n");
    out.emplace_back(e[0].get<int>(), get<double>(e[1], where));
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const Json& doc) {
  using namespace detail;
  RunConfig c;
  require_keys(doc, "config", {"domain", "discretization", "boundary", "solver", "verify", "output"});
  if (doc.contains("domain")) {
    const auto& d = doc.at("domain");
    require_keys(d, "domain", {"type", "L", "map"});
    read(d, "type", "domain", c.domain_type);
    if (c.domain_type != "annulus" && c.domain_type != "mapped" && c.domain_type != "shell")
      throw ConfigError("domain.type: expected annulus, mapped or shell");
    read(d, "L", "domain", c.L);
    if (!(c.L > 1.0)) throw ConfigError("domain.L: must exceed 1");
    if (d.contains("map")) {
      const auto& m = d.at("map");
      require_keys(m, "domain.map", {"epsilon", "cos_modes", "sin_modes", "perturb_inner"});
      MapConfig mc;
      read(m, "epsilon", "domain.map", mc.epsilon);
      if (m.contains("cos_modes")) mc.cos_modes = read_map_modes(m.at("cos_modes"), "domain.map.cos_modes");
      if (m.contains("sin_modes")) mc.sin_modes = read_map_modes(m.at("sin_modes"), "domain.map.sin_modes");
      read(m, "perturb_inner", "domain.map", mc.perturb_inner);
      c.map = mc;
    }
    if (c.domain_type == "mapped" && !c.map) c.map = MapConfig{};
    if (c.domain_type != "mapped" && c.map) throw ConfigError("domain.map: only allowed for type mapped");
  }
  if (doc.contains("discretization")) {
    const auto& d = doc.at("discretization");
    require_keys(d, "discretization", {"K", "N_r", "n_phi", "l_max", "spacing"});
    read(d, "K", "discretization", c.K);
    read(d, "N_r", "discretization", c.N_r);
    read(d, "n_phi", "discretization", c.n_phi);
    read(d, "l_max", "discretization", c.l_max);
    if (d.contains("spacing")) {
      const auto s = get<std::string>(d.at("spacing"), "discretization.spacing");
      if (s == "chebyshev")
        c.spacing = RadialSpacing::chebyshev;
      else if (s == "uniform")
        c.spacing = RadialSpacing::uniform;
      else
        throw ConfigError("discretization.spacing: expected chebyshev or uniform");
    }
  }
  if (doc.contains("boundary")) {
    const auto& b = doc.at("boundary");
    if (c.domain_type == "shell") {
      require_keys(b, "boundary", {"f_inner", "f_outer", "g_psi", "g_phi"});
      if (b.contains("f_inner")) c.sh_f_inner = read_sh(b.at("f_inner"), "boundary.f_inner");
      if (b.contains("f_outer")) c.sh_f_outer = read_sh(b.at("f_outer"), "boundary.f_outer");
      if (b.contains("g_psi")) c.sh_g_psi = read_sh(b.at("g_psi"), "boundary.g_psi");
      if (b.contains("g_phi")) c.sh_g_phi = read_sh(b.at("g_phi"), "boundary.g_phi");
    } else {
      require_keys(b, "boundary", {"f_inner", "f_outer", "g"});
      if (b.contains("f_inner")) c.f_inner = read_trig(b.at("f_inner"), "boundary.f_inner");
      if (b.contains("f_outer")) c.f_outer = read_trig(b.at("f_outer"), "boundary.f_outer");
      if (b.contains("g")) c.g = read_trig(b.at("g"), "boundary.g");
    }
  }
  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    require_keys(s, "solver",
                 {"tol_fixed_point", "tol_residual", "max_iter", "damping", "perturbation_size", "mode", "fixed_J",
                  "reuse_initial_operator", "ode_rtol", "ode_atol", "tangency_floor", "elliptic"});
    auto& cfg = c.solver;
    read(s, "tol_fixed_point", "solver", cfg.tol_fixed_point);
    read(s, "tol_residual", "solver", cfg.tol_residual);
    read(s, "max_iter", "solver", cfg.max_iter);
    read(s, "damping", "solver", cfg.damping);
    read(s, "perturbation_size", "solver", cfg.perturbation_size);
    read(s, "fixed_J", "solver", cfg.fixed_J);
    read(s, "reuse_initial_operator", "solver", cfg.reuse_initial_operator);
    read(s, "ode_rtol", "solver", cfg.trace.rtol);
    read(s, "ode_atol", "solver", cfg.trace.atol);
    read(s, "tangency_floor", "solver", cfg.trace.tangency_floor);
    if (s.contains("mode")) {
      const auto m = get<std::string>(s.at("mode"), "solver.mode");
      if (m == "pressure_J")
        cfg.mode = JMode::pressure_J;
      else if (m == "fixed_J")
        cfg.mode = JMode::fixed_J;
      else
        throw ConfigError("solver.mode: expected pressure_J or fixed_J");
    }
    if (s.contains("elliptic")) {
      const auto e = get<std::string>(s.at("elliptic"), "solver.elliptic");
      if (e == "curvature")
        c.elliptic = SurfaceEllipticForm::curvature;
      else if (e == "flat")
        c.elliptic = SurfaceEllipticForm::flat;
      else
        throw ConfigError("solver.elliptic: expected curvature or flat");
    }
  }
  if (doc.contains("verify")) {
    c.verify = doc.at("verify");
    if (!c.verify.is_object()) throw ConfigError("verify: expected an object");
  }
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    require_keys(o, "output", {"prefix", "operator_csv", "all_modes"});
    read(o, "prefix", "output", c.prefix);
    read(o, "operator_csv", "output", c.operator_csv);
    read(o, "all_modes", "output", c.all_modes);
    if (c.prefix.find('/') != std::string::npos) throw ConfigError("output.prefix: must not contain '/'");
  }
  c.solver.outer_radius = c.L;
  c.canonical = doc.dump();
  c.hash = fnv1a(c.canonical);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

inline BoundaryFourier trig_series(const std::vector<TrigTerm>& terms, int K) {
  BoundaryFourier f(K);
  for (const auto& t : terms) {
    if (t.n > K) throw ConfigError("boundary mode " + std::to_string(t.n) + " exceeds K = " + std::to_string(K));
    f = f + BoundaryFourier::trig(K, t.n, t.a, t.b);
  }
  return f;
}

inline BoundarySH sh_series(const std::vector<SHTerm>& terms, int l_max) {
  BoundarySH s(l_max);
  for (const auto& t : terms) {
    if (t.l > l_max) throw ConfigError("boundary mode l = " + std::to_string(t.l) + " exceeds l_max");
    s(t.l, t.m) += t.value;
  }
  return s;
}

/// Suite parameters from the verify block; unknown keys are rejected.
class VerifyParams {
 public:
  VerifyParams(const Json& j, std::string suite, std::set<std::string> allowed) : j_(j), where_("verify") {
    detail::require_keys(j_, "verify (" + suite + ")", allowed);
  }
  template <class T>
  void read(const char* key, T& out) const {
    detail::read(j_, key, where_, out);
  }

 private:
  const Json& j_;
  std::string where_;
};

// ---------------------------------------------------------------------------
// Writers. Floating point is printed with 17 significant digits so that equal
// runs give byte-identical files.

inline std::string format_real(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void emit_json(std::ostream& os, const Json& j, int indent) {
  const std::string pad(indent + 2, ' '), end(indent, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(k).dump() << ": ";
        emit_json(os, v, indent + 2);
      }
      os << "\n" << end << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (flat) {
        os << "[";
        for (size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          emit_json(os, j[i], indent);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        emit_json(os, j[i], indent + 2);
      }
      os << "\n" << end << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_real(x) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

struct ArtifactHeader {
  std::string command;
  std::string config_hash;
};

inline Json header_json(const ArtifactHeader& h) {
  return {{"library", "mhs"}, {"version", kVersion}, {"command", h.command}, {"config_hash", h.config_hash}};
}

inline void write_json(const std::filesystem::path& path, Json body, const ArtifactHeader& h) {
  body["header"] = header_json(h);
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  detail::emit_json(os, body, 0);
  os << "\n";
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const ArtifactHeader& h, const std::vector<std::string>& columns)
      : os_(path) {
    if (!os_) throw Error("cannot write " + path.string());
    os_ << "# mhs " << kVersion << "\n# command " << h.command << "\n# config_hash " << h.config_hash << "\n";
    for (size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      os_ << (first ? "" : ",") << format_real(v);
      first = false;
    }
    os_ << "\n";
  }
  template <class Range>
  void row_of(const Range& values) {
    bool first = true;
    for (double v : values) {
      os_ << (first ? "" : ",") << format_real(v);
      first = false;
    }
    os_ << "\n";
  }

 private:
  std::ofstream os_;
};

/// Nodal fields, columns r, phi, B_r, B_phi, j, p. On a mapped domain r and phi
/// are reference coordinates and B_r, B_phi components along e_r(phi), e_phi(phi).
inline void write_field_csv(const std::filesystem::path& path, const ArtifactHeader& h, const Field2D& b,
                            const RealMatrix& j, const RealMatrix* p) {
  CsvWriter w(path, h, {"r", "phi", "B_r", "B_phi", "j", "p"});
  const auto& g = b.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) w.row({g.r[i], g.phi(k), b.br(i, k), b.bphi(i, k), j(i, k), p ? (*p)(i, k) : nan});
}

inline void write_pressure_csv(const std::filesystem::path& path, const ArtifactHeader& h, const PressureField& p) {
  CsvWriter w(path, h, {"r", "phi", "p"});
  for (int i = 0; i < p.grid.n_r(); ++i)
    for (int k = 0; k < p.grid.n_phi; ++k) w.row({p.grid.r[i], p.grid.phi(k), p.values(i, k)});
}

/// Operator matrix, row-major, one row per output mode, "re,im" pairs per input mode.
inline void write_operator_csv(const std::filesystem::path& path, const ArtifactHeader& h, const OperatorMatrix& A) {
  std::vector<std::string> cols{"k_out"};
  for (int k = -A.K; k <= A.K; ++k) {
    cols.push_back("re_" + std::to_string(k));
    cols.push_back("im_" + std::to_string(k));
  }
  CsvWriter w(path, h, cols);
  for (int r = 0; r < A.m.rows(); ++r) {
    std::vector<double> v{static_cast<double>(r - A.K)};
    for (int c = 0; c < A.m.cols(); ++c) {
      v.push_back(A.m(r, c).real());
      v.push_back(A.m(r, c).imag());
    }
    w.row_of(v);
  }
}

inline Json sh_json(const BoundarySH& s, bool nonzero_only = true) {
  Json a = Json::array();
  for (int l = 0; l <= s.l_max(); ++l)
    for (int m = -l; m <= l; ++m) {
      const Complex v = s(l, m);
      if (nonzero_only && v == Complex(0.0)) continue;
      a.push_back({l, m, v.real(), v.imag()});
    }
  return a;
}

inline Json iteration_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"increment", r.increment},
          {"contraction", r.contraction},
          {"lambda", r.lambda},
          {"J", r.J},
          {"condition_A", r.condition},
          {"equation_residual", r.equation_residual},
          {"loop_defect", r.loop_defect},
          {"residuals",
           {{"div", r.residuals.div},
            {"curl_minus_j", r.residuals.curl_minus_j},
            {"force", r.residuals.force},
            {"normal_inner", r.residuals.normal_inner},
            {"normal_outer", r.residuals.normal_outer},
            {"tangential_inner", r.residuals.tangential_inner}}}};
}

inline Json iteration_json(const MappedIterationRecord& r) {
  return {{"iteration", r.iteration}, {"increment", r.increment},   {"contraction", r.contraction},
          {"lambda", r.lambda},       {"J", r.J},                   {"condition_A", r.condition},
          {"normal_error", r.normal_error}, {"tangential_error", r.tangential_error}};
}

/// Suite report; runtime checks carry their outcome but no value, keeping the
/// file independent of machine load.
inline Json suite_json(const SuiteReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json e{{"name", c.name}, {"threshold", c.threshold}, {"comparison", c.upper ? "<" : ">"}, {"pass", c.pass}};
    if (c.name.rfind("runtime", 0) != 0) e["value"] = c.value;
    checks.push_back(e);
  }
  Json meas = Json::object();
  for (const auto& [k, v] : r.measurements) meas[k] = v;
  return {{"suite", r.suite}, {"pass", r.pass()}, {"checks", checks}, {"measurements", meas}};
}

}  // namespace mhs
