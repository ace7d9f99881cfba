#include "evolab/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <sstream>

namespace evolab {

namespace {

// RFC 4180 quoting for free-text fields
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

std::string vec(const std::optional<Vector>& v) {
  if (!v) return {};
  std::string out;
  for (Eigen::Index i = 0; i < v->size(); ++i) {
    if (i) out += '|';
    out += format_number((*v)[i]);
  }
  return out;
}

std::string key_of(const InequalityReport& r) {
  const auto& p = r.params;
  return csv_field(r.name) + ',' + opt(p.p) + ',' + opt(p.q) + ',' + opt(p.eps) + ',' + opt(p.lambda) + ',' + opt(p.delta) +
         ',' + opt(p.s) + ',' + opt(p.t) + ',' + vec(p.x) + ',' + vec(p.y);
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<InequalityReport> sort_reports(std::vector<InequalityReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const InequalityReport& a, const InequalityReport& b) {
    if (a.name != b.name) return a.name < b.name;
    const std::string ka = key_of(a), kb = key_of(b);
    if (ka != kb) return ka < kb;
    return a.seed < b.seed;
  });
  return reports;
}

void write_report_csv(std::ostream& os, const std::vector<InequalityReport>& reports) {
  os << "name,p,q,eps,lambda,delta,s,t,x,y,lhs,lhs_se,rhs,rhs_se,margin,verdict,seed\n";
  for (const auto& r : reports) {
    os << key_of(r) << ',' << format_number(r.lhs.value) << ',' << format_number(r.lhs.stderr) << ','
       << format_number(r.rhs.value) << ',' << format_number(r.rhs.stderr) << ',' << format_number(r.margin) << ','
       << to_string(r.verdict) << ',' << r.seed << '\n';
  }
}

std::string report_csv(const std::vector<InequalityReport>& reports) {
  std::ostringstream os;
  write_report_csv(os, reports);
  return os.str();
}

std::string summary_json(const std::vector<InequalityReport>& reports) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::object();
  std::map<std::string, std::array<int, 3>> counts;
  std::map<std::string, std::vector<std::string>> notes;
  std::array<int, 3> total{0, 0, 0};
  for (const auto& r : reports) {
    const int k = r.verdict == Verdict::Pass ? 0 : r.verdict == Verdict::Fail ? 1 : 2;
    ++counts[r.name][static_cast<std::size_t>(k)];
    ++total[static_cast<std::size_t>(k)];
    auto& n = notes[r.name];
    for (const auto& s : r.notes)
      if (std::find(n.begin(), n.end(), s) == n.end() && n.size() < 8) n.push_back(s);
  }
  for (const auto& [name, c] : counts) {
    checks[name] = {{"pass", c[0]}, {"fail", c[1]}, {"inconclusive", c[2]}, {"notes", notes[name]}};
  }
  nlohmann::ordered_json j;
  j["checks"] = checks;
  j["total"] = {{"pass", total[0]}, {"fail", total[1]}, {"inconclusive", total[2]}};
  j["exit_code"] = exit_code(reports);
  return j.dump(2) + "\n";
}

void write_estimate_csv(std::ostream& os, const std::vector<std::pair<std::string, McEstimate>>& rows,
                        std::uint64_t seed) {
  os << "name,value,stderr,n,seed\n";
  for (const auto& [name, e] : rows)
    os << csv_field(name) << ',' << format_number(e.value) << ',' << format_number(e.stderr) << ',' << e.n << ',' << seed << '\n';
}

void write_plot(std::ostream& os, const std::string& header, const std::vector<double>& x,
                const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("plot columns differ in length");
  os << "# " << header << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) os << format_number(x[i]) << ' ' << format_number(y[i]) << '\n';
}

int exit_code(const std::vector<InequalityReport>& reports) {
  bool inconclusive = false;
  for (const auto& r : reports) {
    if (r.verdict == Verdict::Fail) return 2;
    if (r.verdict == Verdict::Inconclusive) inconclusive = true;
  }
  return inconclusive ? 3 : 0;
}

}  // namespace evolab
