#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace textanon {

/// Objective callback: writes the gradient at `x` into `grad` and returns f(x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  std::size_t history = 10;
  std::size_t max_iterations = 100;
  /// Stop when |f_prev - f| / max(1, |f_prev|) falls below this.
  double tolerance = 1e-6;
  std::size_t max_line_search = 40;
};

struct LbfgsResult {
  /// Objective at the start point followed by the value after each iteration.
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::string status;
};

/// Limited-memory BFGS with a backtracking Armijo line search; every accepted
/// step strictly decreases the objective.
LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double>& x,
                           const LbfgsOptions& options = {});

}  // namespace textanon
