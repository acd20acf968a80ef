#include "config.hpp"

#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "gapx/densities.hpp"
#include "gapx/errors.hpp"

namespace gapx::cli {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& t) {
  double v = 0.0;
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("not a number: '" + t + "'");
  return v;
}

long long to_integer(const std::string& t) {
  long long v = 0;
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("not an integer: '" + t + "'");
  return v;
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

/// Key lookup with line anchoring and unknown-key detection.
class Reader {
 public:
  Reader(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string section;
    int n = 0;
    for (std::string line; std::getline(in, line);) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        lines_.emplace(section, n);
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_.emplace(section + "." + trim(t.substr(0, eq)), n);
    }
    try {
      std::istringstream is(text);
      pt::read_ini(is, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source_, e.line(), e.message()));
    }
  }

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(fmt::format("{}:{}: {}: {}", source_, line(path), path, msg));
  }

  int line(const std::string& path) const {
    if (auto it = lines_.find(path); it != lines_.end()) return it->second;
    const auto dot = path.find('.');
    if (auto it = lines_.find(path.substr(0, dot)); it != lines_.end()) return it->second;
    return 0;
  }

  std::optional<std::string> raw(const std::string& path) {
    seen_.insert(path);
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.')))
      return trim(*v);
    return std::nullopt;
  }

  bool has(const std::string& path) const {
    return tree_.get_optional<std::string>(pt::ptree::path_type(path, '.')).has_value();
  }

  template <class F>
  void convert(const std::string& path, F&& f) {
    const auto v = raw(path);
    if (!v) return;
    try {
      f(*v);
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    } catch (const gapx::Error& e) {
      fail(path, e.what());
    }
  }

  void get(const std::string& path, double& out) {
    convert(path, [&](const std::string& v) { out = to_double(v); });
  }
  void get(const std::string& path, int& out) {
    convert(path, [&](const std::string& v) { out = static_cast<int>(to_integer(v)); });
  }
  void get(const std::string& path, std::uint64_t& out) {
    convert(path, [&](const std::string& v) {
      const long long x = to_integer(v);
      if (x < 0) throw std::invalid_argument("must be nonnegative");
      out = static_cast<std::uint64_t>(x);
    });
  }
  void get(const std::string& path, bool& out) {
    convert(path, [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") out = true;
      else if (v == "false" || v == "0" || v == "no") out = false;
      else throw std::invalid_argument("not a boolean: '" + v + "'");
    });
  }
  void get(const std::string& path, std::string& out) {
    convert(path, [&](const std::string& v) { out = v; });
  }

  /// Rejects keys and sections that were never looked up.
  void check_unknown() const {
    for (const auto& [section, sub] : tree_) {
      if (sub.empty() && !sub.data().empty())
        throw ConfigError(fmt::format("{}:{}: key '{}' outside any section", source_,
                                      line("." + section), section));
      for (const auto& [key, value] : sub) {
        (void)value;
        const std::string p = section + "." + key;
        if (!seen_.contains(p))
          throw ConfigError(fmt::format("{}:{}: unknown key '{}'", source_, line(p), p));
      }
    }
  }

  const pt::ptree& tree() const { return tree_; }
  const std::map<std::string, int>& lines() const { return lines_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  pt::ptree tree_;
  std::map<std::string, int> lines_;
  std::set<std::string> seen_;
};

std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : tokens(s)) out.push_back(to_double(t));
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& t : tokens(s)) out.push_back(static_cast<int>(to_integer(t)));
  return out;
}

std::vector<cplx> parse_complexes(const std::string& s) {
  std::vector<cplx> out;
  for (const auto& t : tokens(s)) out.push_back(parse_complex(t));
  return out;
}

CVector parse_cvector(const std::string& s) {
  const auto v = parse_complexes(s);
  if (v.empty()) throw std::invalid_argument("empty vector");
  CVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

/// Rows separated by ';', entries by whitespace.
CMatrix parse_cmatrix(const std::string& s) {
  std::vector<std::vector<cplx>> rows;
  for (const auto& r : split(s, ';')) rows.push_back(parse_complexes(r));
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("empty matrix");
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw std::invalid_argument("ragged matrix rows");
  CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

Eigen::MatrixXd parse_rmatrix(const std::string& s) {
  const CMatrix c = parse_cmatrix(s);
  if (c.imag().cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("matrix must be real");
  return c.real();
}

std::string format_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt_double(v[i]);
  return out;
}

std::string format_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

std::string format_cvector(const CVector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_complex(v(i));
  return out;
}

std::string format_cmatrix(const CMatrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? " " : "") + format_complex(m(i, j));
  }
  return out;
}

std::string format_rmatrix(const Eigen::MatrixXd& m) {
  return format_cmatrix(m.cast<cplx>());
}

const std::regex& rational_key() {
  static const std::regex re("[FG]_[0-9]+_[0-9]+_(num|den)");
  return re;
}

void read_constraint(Reader& r, const std::string& prefix, ConstraintConfig& c) {
  const std::string p = "minimax." + prefix + "_";
  r.convert(p + "kind", [&](const std::string& v) {
    parse_kind(v);
    c.kind = v;
  });
  r.get(p + "level", c.level);
  r.convert(p + "levels", [&](const std::string& v) { c.levels = parse_reals(v); });
  r.convert(p + "moment", [&](const std::string& v) { c.moment = parse_cmatrix(v); });
  r.convert(p + "weight", [&](const std::string& v) { c.weight = parse_cmatrix(v); });
  r.get(p + "lower", c.lower);
  r.get(p + "upper", c.upper);
  r.get(p + "anchor", c.anchor);
  r.get(p + "eps", c.eps);
  r.get(p + "delta", c.delta);
  r.convert(p + "deltas", [&](const std::string& v) { c.deltas = parse_reals(v); });
  r.convert(p + "delta_matrix", [&](const std::string& v) { c.delta_matrix = parse_rmatrix(v); });
}

void read_shape(Reader& r, const std::string& prefix, ShapeBasis& b) {
  const std::string p = "minimax." + prefix + "_";
  r.convert(p + "shape", [&](const std::string& v) { b.kind = parse_shape(v); });
  r.get(p + "order", b.order);
  r.get(p + "lo", b.lo);
  r.get(p + "hi", b.hi);
  if (b.kind == ShapeKind::flat) b.order = 0;
}

void write_constraint(std::ostream& o, const std::string& prefix, const ConstraintConfig& c) {
  const std::string p = prefix + "_";
  o << p << "kind = " << c.kind << '\n';
  o << p << "level = " << fmt_double(c.level) << '\n';
  if (!c.levels.empty()) o << p << "levels = " << format_reals(c.levels) << '\n';
  if (c.moment.size()) o << p << "moment = " << format_cmatrix(c.moment) << '\n';
  if (c.weight.size()) o << p << "weight = " << format_cmatrix(c.weight) << '\n';
  if (!c.lower.empty()) o << p << "lower = " << c.lower << '\n';
  if (!c.upper.empty()) o << p << "upper = " << c.upper << '\n';
  if (!c.anchor.empty()) o << p << "anchor = " << c.anchor << '\n';
  o << p << "eps = " << fmt_double(c.eps) << '\n';
  o << p << "delta = " << fmt_double(c.delta) << '\n';
  if (!c.deltas.empty()) o << p << "deltas = " << format_reals(c.deltas) << '\n';
  if (c.delta_matrix.size()) o << p << "delta_matrix = " << format_rmatrix(c.delta_matrix) << '\n';
}

void write_shape(std::ostream& o, const std::string& prefix, const ShapeBasis& b) {
  o << prefix << "_shape = " << shape_name(b.kind) << '\n';
  o << prefix << "_order = " << b.order << '\n';
  o << prefix << "_lo = " << fmt_double(b.lo) << '\n';
  o << prefix << "_hi = " << fmt_double(b.hi) << '\n';
}

MatrixDensity density_from_spec(const std::string& spec, int dim, const SpectralModel& model) {
  const auto t = tokens(spec);
  if (t.empty()) throw std::invalid_argument("empty density spec");
  if (t[0] == "signal") return model.F;
  if (t[0] == "noise") return model.G;
  if (t[0] == "white") {
    const CMatrix m = parse_cmatrix(trim(spec.substr(spec.find("white") + 5)));
    if (m.rows() == 1 && m.cols() == 1 && dim > 1)
      return white_density(m(0, 0) * CMatrix::Identity(dim, dim));
    return white_density(m);
  }
  if (t[0] == "ar1") {
    if (t.size() != 3) throw std::invalid_argument("ar1 density spec is 'ar1 <b> <scale>'");
    const MatrixDensity s = ar1_density(to_double(t[1]), to_double(t[2]));
    if (dim == 1) return s;
    return MatrixDensity(
        dim, [s, dim](double l) { return CMatrix(s(l)(0, 0) * CMatrix::Identity(dim, dim)); },
        s.pole_radius());
  }
  throw std::invalid_argument("unknown density spec '" + t[0] + "'");
}

SpectralModel uncorrelated(int dim, MatrixDensity F, MatrixDensity G, int grid) {
  SpectralModel m;
  m.dim = dim;
  m.grid_size = grid;
  m.F = std::move(F);
  m.G = std::move(G);
  m.Fxe = MatrixDensity::zero(dim);
  m.Fex = MatrixDensity::zero(dim);
  return m;
}

MatrixDensity read_grid_file(const std::filesystem::path& path, int dim, MatrixDensity* noise) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open grid file " + path.string());
  std::vector<double> lambda;
  std::vector<CMatrix> F, G;
  const std::size_t per = 2 * static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> v;
    try {
      for (const auto& f : split(t, ',')) v.push_back(to_double(trim(f)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
    if (v.size() != 1 + per && v.size() != 1 + 2 * per)
      throw std::invalid_argument(
          fmt::format("{}:{}: expected {} or {} columns", path.string(), n, 1 + per, 1 + 2 * per));
    auto block = [&](std::size_t off) {
      CMatrix m(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          const std::size_t k = off + 2 * static_cast<std::size_t>(i * dim + j);
          m(i, j) = cplx(v[k], v[k + 1]);
        }
      return m;
    };
    lambda.push_back(v[0]);
    F.push_back(block(1));
    if (v.size() == 1 + 2 * per) G.push_back(block(1 + per));
  }
  if (!G.empty() && G.size() != F.size())
    throw std::invalid_argument("grid file mixes rows with and without noise columns");
  if (!G.empty()) *noise = grid_density(lambda, std::move(G));
  return grid_density(std::move(lambda), std::move(F));
}

[[noreturn]] void fail_at(const RunConfig& cfg, const std::string& path, const std::string& msg) {
  int line = 0;
  if (auto it = cfg.lines.find(path); it != cfg.lines.end()) line = it->second;
  else if (auto s = cfg.lines.find(path.substr(0, path.find('.'))); s != cfg.lines.end()) line = s->second;
  throw ConfigError(fmt::format("{}:{}: {}: {}", cfg.source, line, path, msg));
}

}  // namespace

cplx parse_complex(const std::string& token) {
  if (!token.empty() && token.front() == '(') {
    if (token.back() != ')') throw std::invalid_argument("unbalanced complex token '" + token + "'");
    const auto parts = split(token.substr(1, token.size() - 2), ',');
    if (parts.size() != 2) throw std::invalid_argument("complex token must be (re,im)");
    return {to_double(trim(parts[0])), to_double(trim(parts[1]))};
  }
  return {to_double(token), 0.0};
}

std::string format_complex(cplx z) {
  if (z.imag() == 0.0) return fmt_double(z.real());
  return "(" + fmt_double(z.real()) + "," + fmt_double(z.imag()) + ")";
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  Reader r(text, source);
  RunConfig c;

  ModelConfig& m = c.model;
  r.convert("model.kind", [&](const std::string& v) {
    static const std::set<std::string> kinds{"example1", "ar1", "var1", "joint_var1", "rational", "grid"};
    if (!kinds.contains(v)) throw std::invalid_argument("unknown model kind '" + v + "'");
    m.kind = v;
  });
  r.get("model.grid_size", m.grid_size);
  r.get("model.b1", m.b1);
  r.get("model.b2", m.b2);
  r.get("model.signal_b", m.signal_b);
  r.get("model.signal_scale", m.signal_scale);
  r.get("model.noise_b", m.noise_b);
  r.get("model.noise_scale", m.noise_scale);
  r.convert("model.signal_phi", [&](const std::string& v) { m.signal_phi = parse_cmatrix(v); });
  r.convert("model.signal_sigma", [&](const std::string& v) { m.signal_sigma = parse_cmatrix(v); });
  r.convert("model.noise_phi", [&](const std::string& v) { m.noise_phi = parse_cmatrix(v); });
  r.convert("model.noise_sigma", [&](const std::string& v) { m.noise_sigma = parse_cmatrix(v); });
  r.convert("model.phi", [&](const std::string& v) { m.phi = parse_cmatrix(v); });
  r.convert("model.sigma", [&](const std::string& v) { m.sigma = parse_cmatrix(v); });
  r.get("model.dim", m.dim);
  r.get("model.hermitian", m.hermitian);
  r.get("model.grid_file", m.grid_file);
  if (const auto sec = r.tree().get_child_optional("model")) {
    for (const auto& [key, value] : *sec) {
      (void)value;
      if (std::regex_match(key, rational_key()))
        r.convert("model." + key, [&](const std::string& v) { m.rational[key] = parse_complexes(v); });
    }
  }

  r.convert("pattern.intervals", [&](const std::string& v) {
    for (const auto& item : split(v, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      const auto parts = split(t, ':');
      if (parts.size() != 2) throw std::invalid_argument("interval must be M:N, got '" + t + "'");
      c.intervals.push_back({static_cast<int>(to_integer(trim(parts[0]))),
                             static_cast<int>(to_integer(trim(parts[1])))});
    }
  });
  r.convert("pattern.points", [&](const std::string& v) {
    const auto pts = parse_ints(v);
    for (const auto& iv : MissingPattern::from_points(pts).intervals()) c.intervals.push_back(iv);
  });
  try {
    MissingPattern check(c.intervals);
  } catch (const gapx::Error& e) {
    r.fail("pattern", e.what());
  }

  std::map<int, CVector> a;
  if (const auto sec = r.tree().get_child_optional("functional")) {
    static const std::regex key("a([0-9]+)");
    for (const auto& [k, value] : *sec) {
      (void)value;
      std::smatch mt;
      if (std::regex_match(k, mt, key)) {
        const int j = std::stoi(mt[1]);
        r.convert("functional." + k, [&](const std::string& v) { a[j] = parse_cvector(v); });
      }
    }
  }
  r.get("functional.finite_horizon", c.finite_horizon);
  if (!a.empty()) {
    c.a.clear();
    int j = 0;
    for (const auto& [idx, v] : a) {
      if (idx != j) r.fail("functional.a" + std::to_string(j), "coefficient missing");
      if (v.size() != a.begin()->second.size())
        r.fail("functional.a" + std::to_string(idx), "coefficient dimension differs from a0");
      c.a.push_back(v);
      ++j;
    }
  }

  r.get("solver.truncation", c.solver.truncation);
  r.get("solver.max_truncation", c.solver.max_truncation);
  r.get("solver.condition_ceiling", c.solver.condition_ceiling);
  r.get("solver.tol", c.solver.tol);
  r.get("solver.obs_window", c.solver.obs_window);

  r.get("simulation.path_length", c.simulation.path_length);
  r.get("simulation.replications", c.simulation.replications);
  r.get("simulation.seed", c.simulation.seed);
  r.get("simulation.window", c.simulation.window);

  r.convert("oracle.truncations", [&](const std::string& v) { c.oracle.truncations = parse_ints(v); });
  r.convert("oracle.windows", [&](const std::string& v) { c.oracle.windows = parse_ints(v); });
  r.get("oracle.tol", c.oracle.tol);
  if (c.oracle.truncations.empty() || c.oracle.windows.empty())
    r.fail("oracle", "schedule lists must be non-empty");
  if (c.oracle.truncations.size() != c.oracle.windows.size() && c.oracle.truncations.size() != 1 &&
      c.oracle.windows.size() != 1)
    r.fail("oracle.windows", "truncations and windows must have equal length or length 1");

  MinimaxConfig& mm = c.minimax;
  r.convert("minimax.family", [&](const std::string& v) {
    if (v != "shapes" && v != "model") throw std::invalid_argument("family must be shapes or model");
    mm.family = v;
  });
  read_constraint(r, "f", mm.f);
  if (r.has("minimax.g_kind")) {
    mm.g.emplace();
    read_constraint(r, "g", *mm.g);
  }
  read_shape(r, "f", mm.f_shape);
  read_shape(r, "g", mm.g_shape);
  r.get("minimax.starts", mm.opt.starts);
  r.get("minimax.budget", mm.opt.budget);
  r.get("minimax.truncation", mm.opt.truncation);
  r.get("minimax.seed", mm.opt.seed);
  r.get("minimax.step_tol", mm.opt.step_tol);
  r.get("minimax.saddle_samples", mm.saddle_samples);
  r.get("minimax.saddle_tol", mm.saddle_tol);
  r.convert("minimax.theta", [&](const std::string& v) { mm.theta = parse_reals(v); });

  r.get("output.dir", c.output_dir);

  for (const auto& [path, value] : std::vector<std::pair<std::string, int>>{
           {"model.grid_size", m.grid_size},
           {"simulation.path_length", c.simulation.path_length},
           {"simulation.replications", c.simulation.replications},
           {"minimax.starts", mm.opt.starts},
           {"minimax.budget", mm.opt.budget}}) {
    if (value < 1) r.fail(path, "must be positive");
  }
  if (!is_power_of_two(m.grid_size)) r.fail("model.grid_size", "must be a power of two");
  if (c.solver.truncation < 0) r.fail("solver.truncation", "must be nonnegative");
  if (c.solver.obs_window < 0) r.fail("solver.obs_window", "must be nonnegative");

  r.check_unknown();
  c.source = source;
  c.lines = r.lines();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ":0: cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), path.string());
  c.base_dir = path.parent_path();
  return c;
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  const ModelConfig& m = c.model;
  o << "[model]\n";
  o << "kind = " << m.kind << '\n';
  o << "grid_size = " << m.grid_size << '\n';
  o << "b1 = " << fmt_double(m.b1) << '\n';
  o << "b2 = " << fmt_double(m.b2) << '\n';
  o << "signal_b = " << fmt_double(m.signal_b) << '\n';
  o << "signal_scale = " << fmt_double(m.signal_scale) << '\n';
  o << "noise_b = " << fmt_double(m.noise_b) << '\n';
  o << "noise_scale = " << fmt_double(m.noise_scale) << '\n';
  if (m.signal_phi.size()) o << "signal_phi = " << format_cmatrix(m.signal_phi) << '\n';
  if (m.signal_sigma.size()) o << "signal_sigma = " << format_cmatrix(m.signal_sigma) << '\n';
  if (m.noise_phi.size()) o << "noise_phi = " << format_cmatrix(m.noise_phi) << '\n';
  if (m.noise_sigma.size()) o << "noise_sigma = " << format_cmatrix(m.noise_sigma) << '\n';
  if (m.phi.size()) o << "phi = " << format_cmatrix(m.phi) << '\n';
  if (m.sigma.size()) o << "sigma = " << format_cmatrix(m.sigma) << '\n';
  o << "dim = " << m.dim << '\n';
  o << "hermitian = " << (m.hermitian ? "true" : "false") << '\n';
  if (!m.grid_file.empty()) o << "grid_file = " << m.grid_file << '\n';
  for (const auto& [k, v] : m.rational) {
    o << k << " =";
    for (cplx z : v) o << ' ' << format_complex(z);
    o << '\n';
  }

  o << "\n[pattern]\n";
  o << "intervals =";
  for (std::size_t i = 0; i < c.intervals.size(); ++i)
    o << (i ? ", " : " ") << c.intervals[i].M << ':' << c.intervals[i].N;
  o << '\n';

  o << "\n[functional]\n";
  for (std::size_t j = 0; j < c.a.size(); ++j) o << 'a' << j << " = " << format_cvector(c.a[j]) << '\n';
  o << "finite_horizon = " << (c.finite_horizon ? "true" : "false") << '\n';

  o << "\n[solver]\n";
  o << "truncation = " << c.solver.truncation << '\n';
  o << "max_truncation = " << c.solver.max_truncation << '\n';
  o << "condition_ceiling = " << fmt_double(c.solver.condition_ceiling) << '\n';
  o << "tol = " << fmt_double(c.solver.tol) << '\n';
  o << "obs_window = " << c.solver.obs_window << '\n';

  o << "\n[simulation]\n";
  o << "path_length = " << c.simulation.path_length << '\n';
  o << "replications = " << c.simulation.replications << '\n';
  o << "seed = " << c.simulation.seed << '\n';
  o << "window = " << c.simulation.window << '\n';

  o << "\n[oracle]\n";
  o << "truncations = " << format_ints(c.oracle.truncations) << '\n';
  o << "windows = " << format_ints(c.oracle.windows) << '\n';
  o << "tol = " << fmt_double(c.oracle.tol) << '\n';

  const MinimaxConfig& mm = c.minimax;
  o << "\n[minimax]\n";
  o << "family = " << mm.family << '\n';
  write_constraint(o, "f", mm.f);
  if (mm.g) write_constraint(o, "g", *mm.g);
  write_shape(o, "f", mm.f_shape);
  write_shape(o, "g", mm.g_shape);
  o << "starts = " << mm.opt.starts << '\n';
  o << "budget = " << mm.opt.budget << '\n';
  o << "truncation = " << mm.opt.truncation << '\n';
  o << "seed = " << mm.opt.seed << '\n';
  o << "step_tol = " << fmt_double(mm.opt.step_tol) << '\n';
  o << "saddle_samples = " << mm.saddle_samples << '\n';
  o << "saddle_tol = " << fmt_double(mm.saddle_tol) << '\n';
  if (!mm.theta.empty()) o << "theta = " << format_reals(mm.theta) << '\n';

  o << "\n[output]\n";
  o << "dir = " << c.output_dir << '\n';
  return o.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  return fmt::format("{:08x}", crc.checksum());
}

bool equivalent(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

SpectralModel build_model(const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  auto wrap = [&](auto&& build) -> SpectralModel {
    try {
      SpectralModel model = build();
      model.grid_size = m.grid_size;
      model.validate();
      return model;
    } catch (const std::invalid_argument& e) {
      fail_at(cfg, "model.kind", e.what());
    } catch (const gapx::InvalidParameter& e) {
      fail_at(cfg, "model.kind", e.what());
    }
  };
  if (m.kind == "example1") return wrap([&] { return make_ar1_pair(m.b1, m.b2, m.grid_size); });
  if (m.kind == "ar1") {
    return wrap([&] {
      MatrixDensity G = m.noise_scale > 0.0 ? ar1_density(m.noise_b, m.noise_scale) : MatrixDensity::zero(1);
      return uncorrelated(1, ar1_density(m.signal_b, m.signal_scale), std::move(G), m.grid_size);
    });
  }
  if (m.kind == "var1") {
    return wrap([&] {
      if (!m.signal_phi.size() || !m.signal_sigma.size())
        throw std::invalid_argument("var1 needs signal_phi and signal_sigma");
      const int d = static_cast<int>(m.signal_phi.rows());
      MatrixDensity G = MatrixDensity::zero(d);
      if (m.noise_sigma.size()) {
        const CMatrix phi = m.noise_phi.size() ? m.noise_phi : CMatrix::Zero(d, d);
        G = var1_density(phi, m.noise_sigma);
      }
      return uncorrelated(d, var1_density(m.signal_phi, m.signal_sigma), std::move(G), m.grid_size);
    });
  }
  if (m.kind == "joint_var1") {
    return wrap([&] {
      if (!m.phi.size() || !m.sigma.size()) throw std::invalid_argument("joint_var1 needs phi and sigma");
      return make_joint_var1(m.phi, m.sigma, m.dim, m.grid_size);
    });
  }
  if (m.kind == "rational") {
    return wrap([&] {
      EntryMap f, g;
      static const std::regex key("([FG])_([0-9]+)_([0-9]+)_(num|den)");
      for (const auto& [k, v] : m.rational) {
        std::smatch mt;
        std::regex_match(k, mt, key);
        const std::pair<int, int> ij{std::stoi(mt[2]), std::stoi(mt[3])};
        if (ij.first >= m.dim || ij.second >= m.dim)
          throw std::invalid_argument("entry " + k + " outside dimension " + std::to_string(m.dim));
        RationalEntry& e = (mt[1] == "F" ? f : g)[ij];
        (mt[4] == "num" ? e.num : e.den) = v;
      }
      if (f.empty()) throw std::invalid_argument("rational model needs F entries");
      MatrixDensity G = g.empty() ? MatrixDensity::zero(m.dim) : rational_density(m.dim, g, m.hermitian);
      return uncorrelated(m.dim, rational_density(m.dim, f, m.hermitian), std::move(G), m.grid_size);
    });
  }
  return wrap([&] {
    if (m.grid_file.empty()) throw std::invalid_argument("grid model needs grid_file");
    std::filesystem::path p(m.grid_file);
    if (p.is_relative()) p = cfg.base_dir / p;
    MatrixDensity G = MatrixDensity::zero(m.dim);
    MatrixDensity F = read_grid_file(p, m.dim, &G);
    return uncorrelated(m.dim, std::move(F), std::move(G), m.grid_size);
  });
}

MissingPattern build_pattern(const RunConfig& cfg) {
  try {
    return MissingPattern(cfg.intervals);
  } catch (const gapx::Error& e) {
    fail_at(cfg, "pattern.intervals", e.what());
  }
}

FunctionalSpec build_functional(const RunConfig& cfg) {
  FunctionalSpec f;
  f.a = cfg.a;
  f.finite_horizon = cfg.finite_horizon;
  return f;
}

DensityClass build_class(const RunConfig& cfg) {
  const MinimaxConfig& mm = cfg.minimax;
  const SpectralModel model = build_model(cfg);
  const int dim = model.dim;
  DensityClass cls;
  cls.dim = dim;
  cls.grid_size = cfg.model.grid_size;
  auto constraint = [&](const ConstraintConfig& c, const std::string& side) {
    try {
      ConstraintSet s;
      std::tie(s.kind, s.variant) = parse_kind(c.kind);
      s.level = c.level;
      s.levels = c.levels;
      s.moment = c.moment;
      s.weight = c.weight;
      if (!c.lower.empty()) s.lower = density_from_spec(c.lower, dim, model);
      if (!c.upper.empty()) s.upper = density_from_spec(c.upper, dim, model);
      if (!c.anchor.empty()) s.anchor = density_from_spec(c.anchor, dim, model);
      s.eps = c.eps;
      s.delta = c.delta;
      s.deltas = c.deltas;
      s.delta_matrix = c.delta_matrix;
      return s;
    } catch (const std::invalid_argument& e) {
      fail_at(cfg, "minimax." + side + "_kind", e.what());
    } catch (const gapx::InvalidParameter& e) {
      fail_at(cfg, "minimax." + side + "_kind", e.what());
    }
  };
  cls.f = constraint(mm.f, "f");
  if (mm.g) cls.g = constraint(*mm.g, "g");
  cls.family.f_shape = mm.f_shape;
  cls.family.g_shape = mm.g_shape;
  if (mm.family == "model") {
    if (!model.Fxe.is_zero() || !model.Fex.is_zero())
      fail_at(cfg, "minimax.family", "model family needs an uncorrelated model");
    cls.family.members.push_back({model.F, model.G});
  }
  try {
    validate_class(cls);
  } catch (const gapx::InvalidParameter& e) {
    fail_at(cfg, "minimax.f_kind", e.what());
  }
  return cls;
}

}  // namespace gapx::cli
