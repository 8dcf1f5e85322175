#include "saf/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "saf/error.hpp"

namespace saf {

namespace {

constexpr double kLambdaTolerance = 1e-8;

const std::array<std::array<double, kMaxFilterOrder + 1>, kMaxFilterOrder + 1>& binomial_table() {
  static const auto table = [] {
    std::array<std::array<double, kMaxFilterOrder + 1>, kMaxFilterOrder + 1> t{};
    for (int n = 0; n <= kMaxFilterOrder; ++n) {
      t[n][0] = 1.0;
      for (int k = 1; k <= n; ++k) {
        t[n][k] = t[n][k - 1] * static_cast<double>(n - k + 1) / static_cast<double>(k);
      }
    }
    return t;
  }();
  return table;
}

double clamp_lambda(double lambda) {
  if (!(lambda >= -kLambdaTolerance && lambda <= 2.0 + kLambdaTolerance)) {
    fail(ErrorCode::OutOfDomain, "lambda " + std::to_string(lambda) + " outside [0, 2]");
  }
  return std::clamp(lambda, 0.0, 2.0);
}

// Row k holds the map gamma -> Chebyshev series coefficient c_k.
Eigen::MatrixXd cheb_coefficient_map(int K) {
  const auto nodes = static_cast<double>(K + 1);
  Eigen::MatrixXd map(K + 1, K + 1);
  for (int k = 0; k <= K; ++k) {
    for (int j = 0; j <= K; ++j) {
      const double angle = std::numbers::pi * (j + 0.5) / nodes;
      map(k, j) = (2.0 / nodes) * std::cos(k * angle);
    }
  }
  map.row(0) *= 0.5;
  return map;
}

}  // namespace

FilterBasis basis_of(const PolyFilter& filter) {
  return std::holds_alternative<BernsteinFilter>(filter) ? FilterBasis::Bernstein
                                                         : FilterBasis::Chebyshev;
}

int order_of(const PolyFilter& filter) {
  return std::visit([](const auto& f) { return f.order(); }, filter);
}

std::vector<double>& coefficients_of(PolyFilter& filter) {
  if (auto* b = std::get_if<BernsteinFilter>(&filter)) return b->psi;
  return std::get<ChebInterpFilter>(filter).gamma;
}

const std::vector<double>& coefficients_of(const PolyFilter& filter) {
  if (const auto* b = std::get_if<BernsteinFilter>(&filter)) return b->psi;
  return std::get<ChebInterpFilter>(filter).gamma;
}

std::string_view to_string(FilterBasis basis) {
  return basis == FilterBasis::Bernstein ? "bern" : "cheb";
}

FilterBasis parse_filter_basis(std::string_view name) {
  if (name == "bern" || name == "bernstein") return FilterBasis::Bernstein;
  if (name == "cheb" || name == "chebyshev") return FilterBasis::Chebyshev;
  fail(ErrorCode::InvalidArgument, "unknown filter backbone '" + std::string(name) + "'");
}

PolyFilter identity_filter(FilterBasis basis, int order) {
  if (order < 0 || order > kMaxFilterOrder) {
    fail(ErrorCode::InvalidArgument, "filter order must be in [0, 64]");
  }
  if (basis == FilterBasis::Bernstein) return BernsteinFilter::identity(order);
  return ChebInterpFilter::identity(order);
}

void validate_filter(const PolyFilter& filter) {
  const auto& c = coefficients_of(filter);
  if (c.empty() || static_cast<int>(c.size()) > kMaxFilterOrder + 1) {
    fail(ErrorCode::InvalidArgument, "filter order must be in [0, 64]");
  }
  double largest = 0.0;
  for (double v : c) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite filter coefficient");
    if (v < 0.0) fail(ErrorCode::InvalidArgument, "negative filter coefficient");
    largest = std::max(largest, v);
  }
  if (largest <= 0.0) fail(ErrorCode::AllZeroCoefficients, "all filter coefficients are zero");
}

double binomial(int K, int k) {
  if (K < 0 || K > kMaxFilterOrder || k < 0 || k > K) {
    fail(ErrorCode::OutOfDomain, "binomial(" + std::to_string(K) + ", " + std::to_string(k) + ")");
  }
  return binomial_table()[K][k];
}

double bernstein_basis(int k, int K, double x) {
  if (k < 0 || k > K || K > kMaxFilterOrder) {
    fail(ErrorCode::OutOfDomain, "Bernstein index out of range");
  }
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::OutOfDomain, "Bernstein argument outside [0, 1]");
  return binomial(K, k) * std::pow(1.0 - x, K - k) * std::pow(x, k);
}

double response(const BernsteinFilter& filter, double lambda) {
  validate_filter(filter);
  const double x = clamp_lambda(lambda) / 2.0;
  const int K = filter.order();
  double sum = 0.0;
  double psi_max = 0.0;
  for (int k = 0; k <= K; ++k) {
    sum += filter.psi[k] * bernstein_basis(k, K, x);
    psi_max = std::max(psi_max, filter.psi[k]);
  }
  return sum / psi_max;
}

std::vector<double> chebyshev_nodes(int K) {
  std::vector<double> nodes(K + 1);
  for (int j = 0; j <= K; ++j) {
    nodes[j] = 1.0 + std::cos(std::numbers::pi * (j + 0.5) / static_cast<double>(K + 1));
  }
  return nodes;
}

ChebResponse cheb_response(const ChebInterpFilter& filter, double lambda) {
  validate_filter(filter);
  const int K = filter.order();
  const double x = clamp_lambda(lambda) - 1.0;

  double numer = 0.0;
  double denom = 0.0;
  double value = 0.0;
  bool on_node = false;
  for (int j = 0; j <= K; ++j) {
    const double angle = std::numbers::pi * (j + 0.5) / static_cast<double>(K + 1);
    const double xj = std::cos(angle);
    if (x == xj) {
      value = filter.gamma[j];
      on_node = true;
      break;
    }
    const double w = ((j % 2 == 0) ? 1.0 : -1.0) * std::sin(angle) / (x - xj);
    numer += w * filter.gamma[j];
    denom += w;
  }
  if (!on_node) value = numer / denom;

  const Eigen::Map<const Eigen::VectorXd> gamma(filter.gamma.data(), K + 1);
  const double bound = (cheb_coefficient_map(K) * gamma).cwiseAbs().sum();
  if (bound <= 0.0) fail(ErrorCode::AllZeroCoefficients, "Chebyshev series is identically zero");
  return {value / bound, bound};
}

double response(const PolyFilter& filter, double lambda) {
  if (const auto* b = std::get_if<BernsteinFilter>(&filter)) return response(*b, lambda);
  return cheb_response(std::get<ChebInterpFilter>(filter), lambda).value;
}

Eigen::VectorXd response_on_basis(const PolyFilter& filter, const SpectralBasis& basis,
                                  double g_floor) {
  validate_filter(filter);
  Eigen::VectorXd out(basis.rank());
  for (Eigen::Index i = 0; i < basis.rank(); ++i) {
    out[i] = std::clamp(response(filter, basis.eigenvalues[i]), g_floor, 1.0);
  }
  return out;
}

FilterExpansion expand(const PolyFilter& filter) {
  validate_filter(filter);
  const auto& c = coefficients_of(filter);
  const int K = static_cast<int>(c.size()) - 1;
  const Eigen::Map<const Eigen::VectorXd> coeffs(c.data(), K + 1);
  FilterExpansion e;
  e.basis = basis_of(filter);
  if (e.basis == FilterBasis::Bernstein) {
    e.weights = coeffs;
    e.scale = coeffs.maxCoeff();
  } else {
    e.weights = cheb_coefficient_map(K) * coeffs;
    e.scale = e.weights.cwiseAbs().sum();
    if (e.scale <= 0.0) fail(ErrorCode::AllZeroCoefficients, "Chebyshev series is identically zero");
  }
  return e;
}

Eigen::VectorXd basis_values(FilterBasis basis, int K, double lambda) {
  const double l = clamp_lambda(lambda);
  Eigen::VectorXd phi(K + 1);
  if (basis == FilterBasis::Bernstein) {
    for (int k = 0; k <= K; ++k) phi[k] = bernstein_basis(k, K, l / 2.0);
  } else {
    const double x = l - 1.0;
    phi[0] = 1.0;
    if (K >= 1) phi[1] = x;
    for (int k = 2; k <= K; ++k) phi[k] = 2.0 * x * phi[k - 1] - phi[k - 2];
  }
  return phi;
}

std::vector<Eigen::MatrixXd> basis_terms(FilterBasis basis, int K, const SymOperator& laplacian,
                                         const Eigen::MatrixXd& signal) {
  if (laplacian.dim() != signal.rows()) {
    fail(ErrorCode::DimensionMismatch, "signal has " + std::to_string(signal.rows()) +
                                           " rows, operator has dimension " +
                                           std::to_string(laplacian.dim()));
  }
  const auto& L = laplacian.matrix();
  std::vector<Eigen::MatrixXd> terms(static_cast<std::size_t>(K + 1));
  if (basis == FilterBasis::Bernstein) {
    // (2I - L)^j X for j = 0..K, then L^k applied to the (K-k)-th power.
    std::vector<Eigen::MatrixXd> shifted(static_cast<std::size_t>(K + 1));
    shifted[0] = signal;
    for (int j = 1; j <= K; ++j) {
      shifted[j] = 2.0 * shifted[j - 1] - L * shifted[j - 1];
    }
    const double half_pow = std::ldexp(1.0, -K);
    for (int k = 0; k <= K; ++k) {
      Eigen::MatrixXd t = shifted[K - k];
      for (int p = 0; p < k; ++p) t = L * t;
      terms[k] = (half_pow * binomial(K, k)) * t;
    }
  } else {
    terms[0] = signal;
    if (K >= 1) terms[1] = L * signal - signal;
    for (int k = 2; k <= K; ++k) {
      terms[k] = 2.0 * (L * terms[k - 1] - terms[k - 1]) - terms[k - 2];
    }
  }
  return terms;
}

Eigen::MatrixXd apply_filter_poly(const PolyFilter& filter, const SymOperator& laplacian,
                                  const Eigen::MatrixXd& signal) {
  const auto e = expand(filter);
  const auto terms = basis_terms(e.basis, order_of(filter), laplacian, signal);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(signal.rows(), signal.cols());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (e.weights[k] != 0.0) out += e.weights[k] * terms[k];
  }
  return out / e.scale;
}

Eigen::MatrixXd apply_filter_spectral(const PolyFilter& filter, const SpectralBasis& basis,
                                      const Eigen::MatrixXd& signal) {
  if (basis.source_dim != signal.rows()) {
    fail(ErrorCode::DimensionMismatch, "signal/basis dimension mismatch");
  }
  Eigen::VectorXd g(basis.rank());
  for (Eigen::Index i = 0; i < basis.rank(); ++i) g[i] = response(filter, basis.eigenvalues[i]);
  const Eigen::MatrixXd& u = basis.eigenvectors;
  return u * (g.asDiagonal() * (u.transpose() * signal));
}

void accumulate_filter_gradient(const PolyFilter& filter, const Eigen::VectorXd& d_weights,
                                double d_scale, PolyFilter& grad) {
  const auto& c = coefficients_of(filter);
  auto& g = coefficients_of(grad);
  if (g.size() != c.size() || basis_of(grad) != basis_of(filter)) {
    fail(ErrorCode::ShapeMismatch, "filter gradient shape mismatch");
  }
  const int K = static_cast<int>(c.size()) - 1;
  if (basis_of(filter) == FilterBasis::Bernstein) {
    const auto argmax = std::distance(c.begin(), std::max_element(c.begin(), c.end()));
    for (int k = 0; k <= K; ++k) g[k] += d_weights[k];
    g[argmax] += d_scale;
  } else {
    const Eigen::MatrixXd map = cheb_coefficient_map(K);
    const Eigen::Map<const Eigen::VectorXd> gamma(c.data(), K + 1);
    const Eigen::VectorXd weights = map * gamma;
    Eigen::VectorXd dw = d_weights;
    for (int k = 0; k <= K; ++k) {
      const double s = weights[k] > 0.0 ? 1.0 : (weights[k] < 0.0 ? -1.0 : 0.0);
      dw[k] += d_scale * s;
    }
    const Eigen::VectorXd dgamma = map.transpose() * dw;
    for (int j = 0; j <= K; ++j) g[j] += dgamma[j];
  }
}

}  // namespace saf
