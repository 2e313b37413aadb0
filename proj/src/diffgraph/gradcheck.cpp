#include <algorithm>
#include <cmath>

#include "pcd/diffgraph.hpp"
#include "pcd/error.hpp"

namespace pcd::ad {

double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
  require(analytic.rows() == numeric.rows() && analytic.cols() == numeric.cols(),
          ErrorDomain::contract, "gradient shapes differ");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    worst = std::max(worst, std::abs(a - n) / std::max(1e-12, std::abs(a) + std::abs(n)));
  }
  return worst;
}

Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

GradCheckResult finite_diff_check(const BlockFunction& f, const std::vector<Matrix>& blocks,
                                  double h) {
  GradCheckResult result;
  {
    Tape tape;
    std::vector<Value> leaves;
    for (const Matrix& b : blocks) leaves.push_back(tape.leaf(b));
    Value loss = f(tape, leaves);
    tape.backward(loss);
    for (const Value& l : leaves) result.analytic.push_back(l.grad());
  }

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto eval = [&](const Matrix& probe) {
      Tape tape;
      std::vector<Value> leaves;
      for (std::size_t j = 0; j < blocks.size(); ++j)
        leaves.push_back(tape.leaf(j == k ? probe : blocks[j]));
      return f(tape, leaves).item();
    };
    result.numeric.push_back(central_difference(eval, blocks[k], h));

    const Matrix& a = result.analytic[k];
    const Matrix& n = result.numeric[k];
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double err = std::abs(a.data()[i] - n.data()[i]) /
                         std::max(1e-12, std::abs(a.data()[i]) + std::abs(n.data()[i]));
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_block = k;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace pcd::ad
