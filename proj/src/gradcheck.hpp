#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace maskgan {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
};

// Central-difference verification of every differentiable op plus the three
// composed training losses (generator CE, discriminator BCE, critic MSE),
// all in 64-bit with eps = 1e-5. Passing bar is 1e-4.
std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed = 7);

double gradcheck_worst(const std::vector<GradCheckResult>& results);
std::string gradcheck_report(const std::vector<GradCheckResult>& results);

}  // namespace maskgan
