#include "evolab/config.hpp"

#include "evolab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace evolab {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// drop a trailing comment, ignoring '#' inside strings
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

double parse_number(const std::string& s, int line) {
  std::string t;
  for (char c : s)
    if (c != '_') t += c;
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) fail(line, "bad value '" + s + "'");
  return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) {
        const char n = s[++i];
        out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else if (s[i] == '"') {
        fail(line, "stray quote in string");
      } else {
        out += s[i];
      }
    }
    return out;
  }
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    std::vector<double> out;
    std::stringstream ss(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(parse_number(t, line));
    }
    return out;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  return parse_number(s, line);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

// Reads one section with a fixed key set.
class Section {
 public:
  Section(const ConfigTable& table, const std::string& name, std::set<std::string> allowed)
      : name_(name), allowed_(std::move(allowed)) {
    if (auto it = table.find(name); it != table.end()) {
      entries_ = &it->second;
      for (const auto& [k, e] : it->second)
        if (!allowed_.count(k)) fail(e.line, "unknown key '" + k + "' in " + label());
    }
  }

  bool present() const { return entries_ != nullptr; }
  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  std::optional<double> number(const std::string& key) const {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<double>(&e->value)) return *v;
    fail(e->line, key + " must be a number");
  }
  double number(const std::string& key, double def) const { return number(key).value_or(def); }

  std::optional<std::string> string(const std::string& key) const {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<std::string>(&e->value)) return *v;
    fail(e->line, key + " must be a string");
  }

  std::optional<bool> boolean(const std::string& key) const {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<bool>(&e->value)) return *v;
    fail(e->line, key + " must be true or false");
  }

  std::optional<std::vector<double>> array(const std::string& key) const {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<std::vector<double>>(&e->value)) return *v;
    fail(e->line, key + " must be an array of numbers");
  }

  const ConfigEntry* find(const std::string& key) const {
    if (!entries_) return nullptr;
    auto it = entries_->find(key);
    return it == entries_->end() ? nullptr : &it->second;
  }

  std::string label() const { return name_.empty() ? "top level" : "[" + name_ + "]"; }

 private:
  std::string name_;
  std::set<std::string> allowed_;
  const std::map<std::string, ConfigEntry>* entries_ = nullptr;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::set<std::string> kSections = {"", "diffusion", "drift", "constants", "lyapunov", "potential"};
const std::set<std::string> kPresetParams = {"theta", "kappa", "alpha"};

struct Diffusion {
  DiffusionFn fn;
  bool constant = true;
  std::optional<double> q;  // scalar constant q
  std::optional<double> eta0, Lambda;
  std::string canonical;
};

Diffusion read_diffusion(const Section& sec, int d) {
  Diffusion out;
  const int forms = int(sec.has("q")) + int(sec.has("diag"));
  if (forms > 1) fail(sec.find("diag")->line, "[diffusion] takes q or diag, not both");
  if (const auto diag = sec.array("diag")) {
    if (static_cast<int>(diag->size()) != d) fail(sec.find("diag")->line, "diag needs one entry per dimension");
    Vector v = Eigen::Map<const Vector>(diag->data(), d);
    if (!(v.minCoeff() > 0)) fail(sec.find("diag")->line, "diag entries must be positive");
    out.fn = [v](double) -> Matrix { return v.asDiagonal(); };
    out.eta0 = v.minCoeff();
    out.Lambda = v.maxCoeff();
    std::string c = "diag=[";
    for (int i = 0; i < d; ++i) c += (i ? "," : "") + num(v[i]);
    out.canonical = c + "]";
    return out;
  }
  const ConfigEntry* e = sec.find("q");
  if (!e || std::holds_alternative<double>(e->value)) {
    const double q = sec.number("q", 1.0);
    if (!(q > 0)) fail(e ? e->line : 0, "q must be positive");
    out.q = q;
    out.fn = [q, d](double) -> Matrix { return q * Matrix::Identity(d, d); };
    out.eta0 = out.Lambda = q;
    out.canonical = "q=" + num(q);
    return out;
  }
  const auto src = sec.string("q");
  if (!src) fail(e->line, "q must be a number or an expression in t");
  const Expression q = Expression::parse(*src, d);
  if (q.uses_x()) fail(e->line, "diffusion may depend on t only");
  out.constant = !q.uses_t();
  out.fn = [q, d](double t) -> Matrix { return q(t, Vector::Zero(d)) * Matrix::Identity(d, d); };
  if (out.constant) out.eta0 = out.Lambda = q(0.0, Vector::Zero(d));
  out.canonical = "q=" + q.to_string();
  return out;
}

Regime read_regime(const Section& c, Regime fallback) {
  Regime r = fallback;
  r.R = c.number("R", fallback.R);
  const auto name = c.string("regime");
  if (!name) {
    if (c.has("K1") || c.has("K2") || c.has("K3")) fail(c.find("K1") ? c.find("K1")->line : 0, "constants need a regime");
    return r;
  }
  const int line = c.find("regime")->line;
  if (*name == "none" || *name == "unclassified") {
    r.tag = Unclassified{};
  } else if (*name == "hyper" || *name == "supercontractive") {
    const auto K1 = c.number("K1");
    if (!K1 || !(*K1 > 0)) fail(line, "regime hyper needs K1 > 0");
    r.tag = Hyper{*K1};
  } else if (*name == "ultrabounded") {
    const auto K2 = c.number("K2");
    const auto alpha = c.number("alpha");
    if (!K2 || !alpha || !(*K2 > 0) || !(*alpha > 1)) fail(line, "regime ultrabounded needs K2 > 0 and alpha > 1");
    r.tag = Ultrabounded{*K2, *alpha};
  } else if (*name == "ultracontractive") {
    const auto K3 = c.number("K3");
    const auto kappa = c.number("kappa");
    if (!K3 || !kappa || !(*K3 > 0) || !(*kappa > 2)) fail(line, "regime ultracontractive needs K3 > 0 and kappa > 2");
    r.tag = Ultracontractive{*K3, *kappa};
  } else {
    fail(line, "unknown regime '" + *name + "'");
  }
  return r;
}

OperatorSpec build_operator(const ConfigTable& table) {
  const Section top(table, "", {"name", "dimension"});
  const double dim_value = top.number("dimension", 1.0);
  if (!(dim_value >= 1) || dim_value != std::floor(dim_value) || dim_value > 64)
    fail(top.find("dimension") ? top.find("dimension")->line : 0, "dimension must be a positive integer");
  const int d = static_cast<int>(dim_value);

  const Section diff(table, "diffusion", {"q", "diag"});
  std::set<std::string> drift_keys = kPresetParams;
  drift_keys.insert({"preset", "expr"});
  const Section drift(table, "drift", drift_keys);
  const Section cons(table, "constants",
                     {"eta0", "Lambda", "r0", "regime", "K1", "K2", "alpha", "K3", "kappa", "R", "superlinear"});
  if (!drift.present()) throw ConfigError("config needs a [drift] section");

  const Diffusion Q = read_diffusion(diff, d);
  const auto preset = drift.string("preset");
  const auto expr = drift.string("expr");
  if (preset.has_value() == expr.has_value()) throw ConfigError("[drift] needs exactly one of preset or expr");

  OperatorSpec spec;
  if (preset) {
    std::vector<std::pair<std::string, double>> params;
    for (const auto& k : kPresetParams)
      if (const auto v = drift.number(k)) params.emplace_back(k, *v);
    if (!Q.q) throw ConfigError("presets take a constant scalar q in [diffusion]");
    params.emplace_back("q", *Q.q);
    spec = make_preset(*preset, params, d);
  } else {
    for (const auto& k : kPresetParams)
      if (drift.has(k)) fail(drift.find(k)->line, "'" + k + "' is a preset parameter; expr drifts take none");
    const DriftExpression b = parse_drift_expression(*expr, d);
    spec.name = "expr";
    spec.dimension = d;
    spec.drift = [b](double t, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { b(t, x, out); };
    spec.diffusion = Q.fn;
    spec.constant_diffusion = Q.constant;
    const auto r0 = cons.number("r0");
    if (!r0) throw ConfigError("expression drifts need r0 in [constants]");
    spec.r0 = *r0;
    spec.superlinear = cons.boolean("superlinear").value_or(false);
    if (!Q.eta0 && !(cons.has("eta0") && cons.has("Lambda")))
      throw ConfigError("time-dependent diffusion needs eta0 and Lambda in [constants]");
    spec.eta0 = Q.eta0.value_or(0.0);
    spec.Lambda = Q.Lambda.value_or(0.0);
    spec.canonical = "expr=" + b.to_string() + " " + Q.canonical + " d=" + std::to_string(d);
  }
  spec.eta0 = cons.number("eta0", spec.eta0);
  spec.Lambda = cons.number("Lambda", spec.Lambda);
  spec.r0 = cons.number("r0", spec.r0);
  if (const auto sl = cons.boolean("superlinear")) spec.superlinear = *sl;
  spec.regime = read_regime(cons, spec.regime);
  if (const auto name = top.string("name")) spec.name = *name;
  if (cons.present()) {
    spec.canonical += " eta0=" + num(spec.eta0) + " Lambda=" + num(spec.Lambda) + " r0=" + num(spec.r0) +
                      " regime=" + spec.regime.to_string() + " R=" + num(spec.regime.R) +
                      (spec.superlinear ? " superlinear" : "");
  }
  spec.validate();
  return spec;
}

std::optional<LyapunovSpec> build_lyapunov(const ConfigTable& table) {
  const Section sec(table, "lyapunov", {"family", "lambda", "delta", "kappa", "a", "gamma", "R"});
  if (!sec.present()) return std::nullopt;
  const auto family = sec.string("family");
  if (!family) throw ConfigError("[lyapunov] needs family");
  LyapunovSpec l;
  l.a = sec.number("a", 1.0);
  l.gamma = sec.number("gamma", 1.0);
  l.R = sec.number("R", 2.0);
  auto need = [&](const char* key) {
    const auto v = sec.number(key);
    if (!v) throw ConfigError(std::string("[lyapunov] family ") + *family + " needs " + key);
    return *v;
  };
  if (*family == "quadratic") {
    l.family = QuadraticLyapunov{need("lambda")};
  } else if (*family == "logpower") {
    l.family = LogPowerLyapunov{need("lambda"), need("delta")};
  } else if (*family == "powerexp") {
    l.family = PowerExpLyapunov{need("delta"), need("kappa")};
  } else {
    throw ConfigError("unknown Lyapunov family '" + *family + "'");
  }
  return l;
}

std::optional<PotentialSpec> build_potential(const ConfigTable& table, int d) {
  const Section sec(table, "potential", {"c", "c0"});
  if (!sec.present()) return std::nullopt;
  const ConfigEntry* e = sec.find("c");
  if (!e) throw ConfigError("[potential] needs c");
  PotentialSpec p;
  if (const auto* v = std::get_if<double>(&e->value)) {
    p = PotentialSpec::constant(*v);
  } else {
    const auto src = sec.string("c");
    const Expression c = Expression::parse(*src, d);
    p.c = [c](double t, const Vector& x) { return c(t, x); };
    p.description = c.to_string();
    if (!c.uses_t() && !c.uses_x()) p.constant_value = c(0.0, Vector::Zero(d));
    p.c0 = p.constant_value.value_or(0.0);
  }
  if (const auto c0 = sec.number("c0")) p.c0 = *c0;
  return p;
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  table[""];
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "bad section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!kSections.count(section) || section.empty()) fail(line, "unknown section [" + section + "]");
      if (table.count(section)) fail(line, "duplicate section [" + section + "]");
      table[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) fail(line, "bad key '" + key + "'");
    auto& sec = table[section];
    if (sec.count(key)) fail(line, "duplicate key '" + key + "'");
    sec[key] = ConfigEntry{parse_value(s.substr(eq + 1), line), line};
  }
  return table;
}

LoadedConfig load_config_text(const std::string& text) {
  const ConfigTable table = parse_config_text(text);
  LoadedConfig out;
  out.spec = build_operator(table);
  out.lyapunov = build_lyapunov(table);
  out.potential = build_potential(table, out.spec.dimension);
  out.content_hash = fnv1a64(text);
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  LoadedConfig out = load_config_text(ss.str());
  out.path = path;
  return out;
}

}  // namespace evolab
