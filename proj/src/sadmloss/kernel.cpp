#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcd/error.hpp"
#include "pcd/sadmloss.hpp"

namespace pcd {
namespace {

void check_shapes(std::span<const ad::Value> a, std::span<const ad::Value> b) {
  require(!a.empty() && !b.empty(), ErrorDomain::contract, "kernel needs non-empty sets");
  const auto rows = a.front().rows();
  const auto cols = a.front().cols();
  auto same = [&](const ad::Value& v) { return v.rows() == rows && v.cols() == cols; };
  require(std::all_of(a.begin(), a.end(), same) && std::all_of(b.begin(), b.end(), same),
          ErrorDomain::contract, "kernel inputs must share one shape");
}

ad::Value pair_kernel(const ad::Value& x, const ad::Value& y, double sigma) {
  if (!x.requires_grad() && !y.requires_grad()) {
    Matrix k(1, 1);
    k(0, 0) = std::exp(-(x.data() - y.data()).squaredNorm() / (2.0 * sigma));
    return x.tape()->constant(std::move(k));
  }
  const ad::Value d2 = ad::sum(ad::square(ad::sub(x, y)));
  return ad::exp(ad::mul_scalar(d2, -1.0 / (2.0 * sigma)));
}

}  // namespace

void KernelConfig::validate() const {
  if (rule == Bandwidth::fixed)
    require(sigma > 0.0 && std::isfinite(sigma), ErrorDomain::config,
            "fixed kernel bandwidth must be positive");
}

double median_heuristic_sigma(std::span<const Matrix* const> items) {
  std::vector<double> d2;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j)
      d2.push_back((*items[i] - *items[j]).squaredNorm());
  if (d2.empty()) return 1.0;
  std::sort(d2.begin(), d2.end());
  const std::size_t m = d2.size() / 2;
  const double median = d2.size() % 2 == 1 ? d2[m] : 0.5 * (d2[m - 1] + d2[m]);
  if (!(median > 0.0)) return 1.0;
  return median / (2.0 * std::numbers::ln2);
}

double resolve_sigma(std::span<const ad::Value> a, std::span<const ad::Value> b,
                     const KernelConfig& cfg) {
  cfg.validate();
  double sigma = cfg.sigma;
  if (cfg.rule == KernelConfig::Bandwidth::median_heuristic) {
    std::vector<const Matrix*> items;
    for (const auto& v : a) items.push_back(&v.data());
    for (const auto& v : b) items.push_back(&v.data());
    sigma = median_heuristic_sigma(items);
  }
  // Overflowing inputs are a diverging run, not a bad setting.
  require(std::isfinite(sigma), ErrorDomain::divergence, "kernel bandwidth is not finite");
  require(sigma > 0.0, ErrorDomain::config, "kernel bandwidth resolved to a non-positive value");
  return sigma;
}

ad::Value gaussian_mean_kernel(std::span<const ad::Value> a, std::span<const ad::Value> b,
                               double sigma) {
  check_shapes(a, b);
  require(sigma > 0.0, ErrorDomain::config, "kernel bandwidth must be positive");
  ad::Value total;
  for (const auto& x : a)
    for (const auto& y : b) {
      const ad::Value k = pair_kernel(x, y, sigma);
      total = total.valid() ? ad::add(total, k) : k;
    }
  return ad::mul_scalar(total, 1.0 / static_cast<double>(a.size() * b.size()));
}

ad::Value mmd_loss(std::span<const ad::Value> a, std::span<const ad::Value> b,
                   const KernelConfig& cfg) {
  check_shapes(a, b);
  const double sigma = resolve_sigma(a, b, cfg);
  const ad::Value kaa = gaussian_mean_kernel(a, a, sigma);
  const ad::Value kbb = gaussian_mean_kernel(b, b, sigma);
  const ad::Value kab = gaussian_mean_kernel(a, b, sigma);
  return ad::sub(ad::add(kaa, kbb), ad::mul_scalar(kab, 2.0));
}

}  // namespace pcd
