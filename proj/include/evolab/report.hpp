#ifndef EVOLAB_REPORT_HPP
#define EVOLAB_REPORT_HPP

// Report files.
//
// reports.csv columns:
//   name,p,q,eps,lambda,delta,s,t,x,y,lhs,lhs_se,rhs,rhs_se,margin,verdict,seed
// Unset parameters are empty; vectors are '|'-joined; numbers use %.17g.
//
// summary.json: {"checks": {name: {"pass": n, "fail": n, "inconclusive": n}}, "total": {...}, "notes": {...}}
// plot files: '#'-prefixed header line, then "x y" rows.

#include "evolab/inequalities.hpp"

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace evolab {

std::string format_number(double v);

/// Sorted by (name, parameters, seed) so merge order never matters.
std::vector<InequalityReport> sort_reports(std::vector<InequalityReport> reports);

void write_report_csv(std::ostream& os, const std::vector<InequalityReport>& reports);
std::string report_csv(const std::vector<InequalityReport>& reports);

std::string summary_json(const std::vector<InequalityReport>& reports);

/// name,value,stderr,n,seed
void write_estimate_csv(std::ostream& os, const std::vector<std::pair<std::string, McEstimate>>& rows,
                        std::uint64_t seed);

void write_plot(std::ostream& os, const std::string& header, const std::vector<double>& x,
                const std::vector<double>& y);

/// 0 clean, 2 any fail, 3 inconclusive but no fail.
int exit_code(const std::vector<InequalityReport>& reports);

}  // namespace evolab

#endif  // EVOLAB_REPORT_HPP
