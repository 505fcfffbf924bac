#include "distrittrl/gmm.hpp"

#include <algorithm>
#include <cmath>

#include "distrittrl/error.hpp"

namespace distrittrl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)
constexpr double kMinWeight = 1e-12;

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / n};
}

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

// E-step: writes responsibilities of component 1 and returns the
// log-likelihood of the current parameters.
double expectation(std::span<const double> values, const Gmm2& g, std::vector<double>& resp1) {
  const double lw1 = std::log(g.weight_1);
  const double lw2 = std::log(g.weight_2);
  const double c1 = -0.5 * (kLog2Pi + std::log(g.var_1));
  const double c2 = -0.5 * (kLog2Pi + std::log(g.var_2));
  const double inv1 = 0.5 / g.var_1;
  const double inv2 = 0.5 / g.var_2;
  double ll = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    const double d1 = x - g.mean_1;
    const double d2 = x - g.mean_2;
    const double l1 = lw1 + c1 - d1 * d1 * inv1;
    const double l2 = lw2 + c2 - d2 * d2 * inv2;
    // e = exp(lo - hi) <= 1; the larger term owns 1 / (1 + e) of the mass.
    const bool first_hi = l1 >= l2;
    const double e = std::exp(first_hi ? l2 - l1 : l1 - l2);
    resp1[i] = first_hi ? 1.0 / (1.0 + e) : e / (1.0 + e);
    ll += (first_hi ? l1 : l2) + std::log1p(e);
  }
  return ll;
}

void maximization(std::span<const double> values, std::span<const double> resp1, double var_floor, Gmm2& g) {
  const double n = static_cast<double>(values.size());
  double n1 = 0.0, n2 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r1 = resp1[i];
    const double r2 = 1.0 - r1;
    n1 += r1;
    n2 += r2;
    s1 += r1 * values[i];
    s2 += r2 * values[i];
  }
  // A component with no mass keeps its location and scale.
  const bool live1 = n1 > n * kMinWeight;
  const bool live2 = n2 > n * kMinWeight;
  if (live1) g.mean_1 = s1 / n1;
  if (live2) g.mean_2 = s2 / n2;
  double q1 = 0.0, q2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d1 = values[i] - g.mean_1;
    const double d2 = values[i] - g.mean_2;
    q1 += resp1[i] * d1 * d1;
    q2 += (1.0 - resp1[i]) * d2 * d2;
  }
  if (live1) g.var_1 = std::max(q1 / n1, var_floor);
  if (live2) g.var_2 = std::max(q2 / n2, var_floor);
  g.weight_1 = std::clamp(n1 / n, kMinWeight, 1.0 - kMinWeight);
  g.weight_2 = 1.0 - g.weight_1;
}

}  // namespace

double normal_pdf(double x, double mean, double var) { return std::exp(log_normal(x, mean, var)); }

Gmm2 fit_gmm2(std::span<const double> values, const EmConfig& config) {
  if (values.size() < 2) fail(ErrorCategory::kArgument, "fit_gmm2 needs at least 2 values");
  if (config.max_iter < 0 || !(config.tol >= 0.0)) fail(ErrorCategory::kArgument, "invalid EM configuration");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCategory::kArgument, "fit_gmm2 received a non-finite value");
  }

  const Moments m = moments(values);
  const double var_floor = 1e-6 * (m.var + 1e-12);
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());

  Gmm2 g;
  if (*max_it - *min_it < 1e-12) {
    g.weight_1 = 1.0;
    g.weight_2 = 0.0;
    g.mean_1 = g.mean_2 = m.mean;
    g.var_1 = g.var_2 = var_floor;
    g.log_likelihood = static_cast<double>(values.size()) * log_normal(m.mean, m.mean, var_floor);
    g.log_likelihood_trace = {g.log_likelihood};
    g.converged = true;
    g.degenerate = true;
    return g;
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  g.mean_1 = quantile_sorted(sorted, 0.25);
  g.mean_2 = quantile_sorted(sorted, 0.75);
  if (g.mean_2 - g.mean_1 < 1e-12 * std::max(1.0, std::abs(m.mean))) {
    // Heavily tied inputs: identical start points would never separate.
    g.mean_1 = sorted.front();
    g.mean_2 = sorted.back();
  }
  g.var_1 = g.var_2 = std::max(m.var, var_floor);
  g.weight_1 = g.weight_2 = 0.5;

  std::vector<double> resp1(values.size());
  double ll_prev = expectation(values, g, resp1);
  g.log_likelihood_trace.push_back(ll_prev);
  for (int it = 1; it <= config.max_iter; ++it) {
    maximization(values, resp1, var_floor, g);
    const double ll = expectation(values, g, resp1);
    g.log_likelihood_trace.push_back(ll);
    g.iterations = it;
    const double improvement = ll - ll_prev;
    const double scale = std::max(std::abs(ll_prev), 1.0);
    ll_prev = ll;
    if (improvement <= config.tol * scale) {
      g.converged = true;
      break;
    }
  }
  g.log_likelihood = g.log_likelihood_trace.back();
  return g;
}

LabeledGmm2 label_components(const Gmm2& g) {
  const GaussianComponent c1{g.mean_1, g.var_1, g.weight_1};
  const GaussianComponent c2{g.mean_2, g.var_2, g.weight_2};
  if (g.mean_2 > g.mean_1) return {c2, c1, g.degenerate};
  return {c1, c2, g.degenerate};
}

LabeledGmm2 fit_labeled(std::span<const double> values, const EmConfig& config) {
  if (values.empty()) fail(ErrorCategory::kArgument, "cannot fit a mixture to no values");
  if (values.size() == 1) {
    const GaussianComponent c{values[0], 1e-18, 1.0};
    return {c, {values[0], 1e-18, 0.0}, true};
  }
  return label_components(fit_gmm2(values, config));
}

ComponentDensities component_likelihood(const LabeledGmm2& g, double x) {
  return {g.pos.weight * normal_pdf(x, g.pos.mean, g.pos.var), g.neg.weight * normal_pdf(x, g.neg.mean, g.neg.var)};
}

std::pair<double, double> responsibilities(const Gmm2& g, double x) {
  const double l1 = std::log(g.weight_1) + log_normal(x, g.mean_1, g.var_1);
  const double l2 = g.weight_2 > 0.0 ? std::log(g.weight_2) + log_normal(x, g.mean_2, g.var_2) : -INFINITY;
  const double hi = std::max(l1, l2);
  const double lse = hi + std::log1p(std::exp(std::min(l1, l2) - hi));
  const double r1 = std::exp(l1 - lse);
  return {r1, 1.0 - r1};
}

}  // namespace distrittrl
