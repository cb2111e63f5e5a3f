#pragma once

#include <cstdint>

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int draws = 20000;
};

/// Prints one line per check; returns true when all pass.
bool run_gradcheck(const GradcheckOptions& opt);
