#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace crannpc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  // Scales instance counts and Monte-Carlo sizes; 1 is the full acceptance run.
  double scale = 1.0;
  std::uint64_t seed = 20240601;
};

// Self-consistency and oracle suites. Each check states its own thresholds in
// `detail`; the full-size versions are the acceptance criteria.
CheckResult check_wmmse_equality(const VerifyOptions& options);
CheckResult check_jensen_bound(const VerifyOptions& options);
CheckResult check_closed_form(const VerifyOptions& options);
CheckResult check_inner_kkt(const VerifyOptions& options);

// Output feasibility is checked on every run of the descent and selection
// checks; their violations are accumulated here.
struct FeasibilityTally {
  int runs = 0;
  int violations = 0;
  std::string first_violation;
};
CheckResult check_descent(const VerifyOptions& options, FeasibilityTally& tally);
CheckResult check_selection(const VerifyOptions& options, FeasibilityTally& tally);
CheckResult check_output_feasibility(const FeasibilityTally& tally);
CheckResult check_trends(const VerifyOptions& options);

// All of the above in acceptance order; `on_result` sees each check as it finishes.
std::vector<CheckResult> run_all_checks(const VerifyOptions& options,
                                        const std::function<void(const CheckResult&)>& on_result = {});

std::string format_check(const CheckResult& r);

}  // namespace crannpc
