#include "textanon/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace textanon {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// Two-loop recursion: d = -H g.
void search_direction(const std::deque<Correction>& history, std::span<const double> grad,
                      std::vector<double>& d) {
  d.assign(grad.begin(), grad.end());
  std::vector<double> alpha(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    const auto& c = history[k];
    alpha[k] = c.rho * dot(c.s, d);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * c.y[i];
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (auto& v : d) v *= gamma;
  }
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& c = history[k];
    const double beta = c.rho * dot(c.y, d);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += c.s[i] * (alpha[k] - beta);
  }
  for (auto& v : d) v = -v;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double>& x,
                           const LbfgsOptions& options) {
  constexpr double kArmijo = 1e-4;
  const std::size_t n = x.size();
  LbfgsResult result;

  std::vector<double> grad(n);
  double f = objective(x, grad);
  result.trace.push_back(f);

  std::deque<Correction> history;
  std::vector<double> d;
  std::vector<double> x_new(n);
  std::vector<double> grad_new(n);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const double gnorm = std::sqrt(dot(grad, grad));
    if (gnorm == 0.0) {
      result.converged = true;
      result.status = "zero gradient";
      return result;
    }
    search_direction(history, grad, d);
    double slope = dot(grad, d);
    if (!(slope < 0.0)) {
      history.clear();
      d.assign(grad.begin(), grad.end());
      for (auto& v : d) v = -v;
      slope = -gnorm * gnorm;
    }

    double step = history.empty() ? 1.0 / gnorm : 1.0;
    double f_new = f;
    bool accepted = false;
    for (std::size_t ls = 0; ls < options.max_line_search; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = objective(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope && f_new < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.status = "line search failed";
      return result;
    }

    Correction c;
    c.s.resize(n);
    c.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = x_new[i] - x[i];
      c.y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-12) {
      c.rho = 1.0 / sy;
      history.push_back(std::move(c));
      if (history.size() > options.history) history.pop_front();
    }

    const double f_prev = f;
    x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    result.trace.push_back(f);
    result.iterations = iter + 1;

    if (std::abs(f_prev - f) / std::max(1.0, std::abs(f_prev)) < options.tolerance) {
      result.converged = true;
      result.status = "relative objective change below tolerance";
      return result;
    }
  }
  result.status = "iteration limit reached";
  return result;
}

}  // namespace textanon
