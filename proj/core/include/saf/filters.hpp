#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "saf/graph.hpp"
#include "saf/spectra.hpp"

namespace saf {

inline constexpr int kMaxFilterOrder = 64;
inline constexpr double kDefaultGFloor = 1e-6;

/// Bernstein filter with non-negative coefficients psi_0..psi_K.
struct BernsteinFilter {
  std::vector<double> psi;

  int order() const { return static_cast<int>(psi.size()) - 1; }
  static BernsteinFilter identity(int order) { return {std::vector<double>(order + 1, 1.0)}; }
};

/// Chebyshev-interpolation filter: gamma_j are the filter values at the K+1
/// Chebyshev nodes mapped to [0, 2].
struct ChebInterpFilter {
  std::vector<double> gamma;

  int order() const { return static_cast<int>(gamma.size()) - 1; }
  static ChebInterpFilter identity(int order) { return {std::vector<double>(order + 1, 1.0)}; }
};

using PolyFilter = std::variant<BernsteinFilter, ChebInterpFilter>;

enum class FilterBasis { Bernstein, Chebyshev };

FilterBasis basis_of(const PolyFilter& filter);
int order_of(const PolyFilter& filter);
std::vector<double>& coefficients_of(PolyFilter& filter);
const std::vector<double>& coefficients_of(const PolyFilter& filter);
std::string_view to_string(FilterBasis basis);
FilterBasis parse_filter_basis(std::string_view name);
PolyFilter identity_filter(FilterBasis basis, int order);

/// C(K, k) in floating point, K <= kMaxFilterOrder.
double binomial(int K, int k);

/// B_{k,K}(x) = C(K,k) (1-x)^{K-k} x^k on [0, 1].
double bernstein_basis(int k, int K, double x);

/// Rescaled Bernstein response (1/psi_max) sum_k psi_k B_{k,K}(lambda / 2).
double response(const BernsteinFilter& filter, double lambda);

struct ChebResponse {
  double value;  // interpolant divided by the bound
  double bound;  // sum_k |c_k| over the Chebyshev-series coefficients
};

/// Barycentric evaluation of the Chebyshev interpolant at lambda, rescaled by
/// the sum of absolute Chebyshev-series coefficients.
ChebResponse cheb_response(const ChebInterpFilter& filter, double lambda);

/// Chebyshev nodes of the first kind mapped to [0, 2], j = 0..K.
std::vector<double> chebyshev_nodes(int K);

double response(const PolyFilter& filter, double lambda);

/// Filter responses on the basis eigenvalues, clamped to [g_floor, 1].
Eigen::VectorXd response_on_basis(const PolyFilter& filter, const SpectralBasis& basis,
                                  double g_floor = kDefaultGFloor);

/// ghat(L) * signal via repeated sparse products with L (no dense powers).
Eigen::MatrixXd apply_filter_poly(const PolyFilter& filter, const SymOperator& laplacian,
                                  const Eigen::MatrixXd& signal);

/// Spectral route U ghat(Lambda) U^T * signal on a full basis, unclamped.
Eigen::MatrixXd apply_filter_spectral(const PolyFilter& filter, const SpectralBasis& basis,
                                      const Eigen::MatrixXd& signal);

/// Linear-in-coefficients form of a filter:
///   ghat(lambda) = sum_k weights[k] * phi_k(lambda) / scale.
/// Bernstein: weights = psi, phi_k = B_{k,K}(lambda/2), scale = max psi.
/// Chebyshev: weights = series coefficients of the interpolant,
///            phi_k = T_k(lambda - 1), scale = sum |weights|.
struct FilterExpansion {
  FilterBasis basis;
  Eigen::VectorXd weights;
  double scale;
};

FilterExpansion expand(const PolyFilter& filter);

/// phi_k(lambda) for k = 0..K.
Eigen::VectorXd basis_values(FilterBasis basis, int K, double lambda);

/// phi_k(L) * signal for k = 0..K.
std::vector<Eigen::MatrixXd> basis_terms(FilterBasis basis, int K, const SymOperator& laplacian,
                                         const Eigen::MatrixXd& signal);

/// Chain rule from (d weights, d scale) back to the stored coefficients;
/// accumulates into `grad` (same alternative as `filter`). The psi_max
/// subgradient goes to the first argmax.
void accumulate_filter_gradient(const PolyFilter& filter, const Eigen::VectorXd& d_weights,
                                double d_scale, PolyFilter& grad);

/// Validation shared by every entry point: order in range, coefficients
/// finite and non-negative, not all zero.
void validate_filter(const PolyFilter& filter);

}  // namespace saf
