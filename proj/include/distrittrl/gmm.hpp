#pragma once

#include <span>
#include <utility>
#include <vector>

namespace distrittrl {

struct EmConfig {
  double tol = 1e-6;  // relative log-likelihood improvement
  int max_iter = 200;
};

// Two-component 1-D Gaussian mixture fitted by EM.
struct Gmm2 {
  double weight_1 = 0.5;
  double weight_2 = 0.5;
  double mean_1 = 0.0;
  double mean_2 = 0.0;
  double var_1 = 1.0;
  double var_2 = 1.0;
  double log_likelihood = 0.0;
  bool converged = false;
  // Input had no spread: component 1 carries all the weight at the sample
  // mean and component 2 is a zero-weight copy of it.
  bool degenerate = false;
  int iterations = 0;
  // Log-likelihood after initialization and after every EM iteration.
  std::vector<double> log_likelihood_trace;
};

struct GaussianComponent {
  double mean = 0.0;
  double var = 1.0;
  double weight = 0.5;

  bool operator==(const GaussianComponent&) const = default;
};

struct LabeledGmm2 {
  GaussianComponent pos;  // larger mean
  GaussianComponent neg;
  bool degenerate = false;

  double midpoint() const noexcept { return 0.5 * (pos.mean + neg.mean); }
  bool operator==(const LabeledGmm2&) const = default;
};

Gmm2 fit_gmm2(std::span<const double> values, const EmConfig& config = {});

// Ties in the means put component 1 on the positive side.
LabeledGmm2 label_components(const Gmm2& g);

// label_components(fit_gmm2(values)), except that fewer than two values give
// a degenerate fit at their mean instead of an error. Empty input is an error.
LabeledGmm2 fit_labeled(std::span<const double> values, const EmConfig& config = {});

struct ComponentDensities {
  double pos = 0.0;
  double neg = 0.0;
};

// Weighted densities pi * N(x | mu, sigma^2) of each component.
ComponentDensities component_likelihood(const LabeledGmm2& g, double x);

// Posterior responsibilities (component 1, component 2) of x.
std::pair<double, double> responsibilities(const Gmm2& g, double x);

double normal_pdf(double x, double mean, double var);

}  // namespace distrittrl
