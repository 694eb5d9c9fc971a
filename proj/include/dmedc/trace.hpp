#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "dmedc/errors.hpp"

namespace dmedc {

struct TraceRow {
  int k = 0;
  double objective = 0.0;
  double infeasibility = 0.0;
  double xi_norm = 0.0;
  double gap_norm = 0.0;  // ||x - y||
  int inner_iters = 0;
  double time_ms = 0.0;
};

using IterateTrace = std::vector<TraceRow>;

inline const char* kTraceHeader =
    "k,objective,infeasibility,xi_norm,gap_norm,inner_iters,time_ms";

class StopWatch {
 public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace dmedc
