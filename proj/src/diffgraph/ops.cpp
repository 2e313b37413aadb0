#include <algorithm>
#include <numeric>
#include <string>

#include "pcd/diffgraph.hpp"
#include "pcd/error.hpp"

namespace pcd::ad {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check(bool cond, const char* op, const std::string& what) {
  require(cond, ErrorDomain::contract, std::string(op) + ": " + what);
}

Tape& tape_of(const Value& v) {
  require(v.valid(), ErrorDomain::contract, "operation on an empty value");
  return *v.tape();
}

enum class Broadcast { none, row, col };

Broadcast broadcast_kind(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::none;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::col;
  check(false, op, "shape mismatch " + shape(a) + " vs " + shape(b));
  return Broadcast::none;
}

Matrix reduce_to(const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::row: return g.colwise().sum();
    case Broadcast::col: return g.rowwise().sum();
    case Broadcast::none: break;
  }
  return g;
}

Value add_like(const Value& a, const Value& b, double sign, const char* op) {
  const Matrix& ad = a.data();
  const Matrix& bd = b.data();
  const Broadcast kind = broadcast_kind(op, ad, bd);
  Matrix out = ad;
  switch (kind) {
    case Broadcast::none: out += sign * bd; break;
    case Broadcast::row: out.rowwise() += sign * bd.row(0); break;
    case Broadcast::col: out.colwise() += sign * bd.col(0); break;
  }
  const Value inputs[] = {a, b};
  return tape_of(a).record(std::move(out), inputs, [a, b, kind, sign](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (b.requires_grad()) t.accumulate(b, sign * reduce_to(g, kind));
  });
}

}  // namespace

Value affine(const Value& x, const Value& w, const Value& b) {
  const Matrix& xd = x.data();
  const Matrix& wd = w.data();
  const Matrix& bd = b.data();
  check(xd.cols() == wd.rows(), "affine", "input " + shape(xd) + " vs weight " + shape(wd));
  check(bd.rows() == 1 && bd.cols() == wd.cols(), "affine",
        "bias " + shape(bd) + " vs weight " + shape(wd));
  Matrix out = xd * wd;
  out.rowwise() += bd.row(0);
  const Value inputs[] = {x, w, b};
  return tape_of(x).record(std::move(out), inputs, [x, w, b](Tape& t, const Matrix& g) {
    if (x.requires_grad()) t.accumulate(x, g * w.data().transpose());
    if (w.requires_grad()) t.accumulate(w, x.data().transpose() * g);
    if (b.requires_grad()) t.accumulate(b, g.colwise().sum());
  });
}

Value matmul(const Value& a, const Value& b) {
  const Matrix& ad = a.data();
  const Matrix& bd = b.data();
  check(ad.cols() == bd.rows(), "matmul", shape(ad) + " times " + shape(bd));
  const Value inputs[] = {a, b};
  return tape_of(a).record(ad * bd, inputs, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.data().transpose());
    if (b.requires_grad()) t.accumulate(b, a.data().transpose() * g);
  });
}

Value relu(const Value& x) {
  const Value inputs[] = {x};
  return tape_of(x).record(x.data().cwiseMax(0.0), inputs, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (x.data().array() > 0.0).select(g, 0.0));
  });
}

Value add(const Value& a, const Value& b) { return add_like(a, b, 1.0, "add"); }
Value sub(const Value& a, const Value& b) { return add_like(a, b, -1.0, "sub"); }

Value mul_scalar(const Value& x, double s) {
  const Value inputs[] = {x};
  return tape_of(x).record(s * x.data(), inputs,
                           [x, s](Tape& t, const Matrix& g) { t.accumulate(x, s * g); });
}

Value neg(const Value& x) {
  const Value inputs[] = {x};
  return tape_of(x).record(-x.data(), inputs,
                           [x](Tape& t, const Matrix& g) { t.accumulate(x, -g); });
}

Value square(const Value& x) {
  const Value inputs[] = {x};
  return tape_of(x).record(x.data().array().square().matrix(), inputs,
                           [x](Tape& t, const Matrix& g) {
                             t.accumulate(x, (2.0 * g.array() * x.data().array()).matrix());
                           });
}

Value exp(const Value& x) {
  const Value inputs[] = {x};
  return tape_of(x).record(x.data().array().exp().matrix(), inputs,
                           [x](Tape& t, const Matrix& g) {
                             t.accumulate(x, (g.array() * x.data().array().exp()).matrix());
                           });
}

Value sum(const Value& x) {
  const Value inputs[] = {x};
  Matrix out(1, 1);
  out(0, 0) = x.data().sum();
  return tape_of(x).record(std::move(out), inputs, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Value mean(const Value& x) {
  const auto count = static_cast<double>(x.data().size());
  check(count > 0, "mean", "empty input");
  const Value inputs[] = {x};
  Matrix out(1, 1);
  out(0, 0) = x.data().sum() / count;
  return tape_of(x).record(std::move(out), inputs, [x, count](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / count));
  });
}

Value row_select(const Value& x, std::span<const std::size_t> rows) {
  const Matrix& xd = x.data();
  std::vector<Eigen::Index> idx(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    check(rows[i] < static_cast<std::size_t>(xd.rows()), "row_select",
          "row " + std::to_string(rows[i]) + " out of range for " + shape(xd));
    idx[i] = static_cast<Eigen::Index>(rows[i]);
  }
  Matrix out(static_cast<Eigen::Index>(idx.size()), xd.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = xd.row(idx[i]);
  const Value inputs[] = {x};
  return tape_of(x).record(std::move(out), inputs, [x, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) dx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(x, dx);
  });
}

Value reshape(const Value& x, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& xd = x.data();
  check(rows * cols == xd.size(), "reshape", shape(xd) + " into " + std::to_string(rows) + "x" +
                                                  std::to_string(cols));
  Matrix out = Eigen::Map<const Matrix>(xd.data(), rows, cols);
  const Value inputs[] = {x};
  return tape_of(x).record(std::move(out), inputs, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, Eigen::Map<const Matrix>(g.data(), x.rows(), x.cols()));
  });
}

std::vector<std::vector<Eigen::Index>> sort_desc_permutation(const Matrix& x) {
  std::vector<std::vector<Eigen::Index>> perm(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto& p = perm[static_cast<std::size_t>(c)];
    p.resize(static_cast<std::size_t>(x.rows()));
    std::iota(p.begin(), p.end(), Eigen::Index{0});
    std::stable_sort(p.begin(), p.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return x(i, c) > x(j, c); });
  }
  return perm;
}

Value channelwise_sort_desc(const Value& x) {
  const Matrix& xd = x.data();
  auto perm = sort_desc_permutation(xd);
  Matrix out(xd.rows(), xd.cols());
  for (Eigen::Index c = 0; c < xd.cols(); ++c) {
    const auto& p = perm[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < xd.rows(); ++r) out(r, c) = xd(p[static_cast<std::size_t>(r)], c);
  }
  const Value inputs[] = {x};
  return tape_of(x).record(std::move(out), inputs,
                           [x, perm = std::move(perm)](Tape& t, const Matrix& g) {
                             Matrix dx(x.rows(), x.cols());
                             for (Eigen::Index c = 0; c < g.cols(); ++c) {
                               const auto& p = perm[static_cast<std::size_t>(c)];
                               for (Eigen::Index r = 0; r < g.rows(); ++r)
                                 dx(p[static_cast<std::size_t>(r)], c) = g(r, c);
                             }
                             t.accumulate(x, dx);
                           });
}

Value channelwise_max(const Value& x) {
  const Matrix& xd = x.data();
  check(xd.rows() >= 1, "channelwise_max", "empty input");
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(xd.cols()), 0);
  Matrix out(1, xd.cols());
  for (Eigen::Index c = 0; c < xd.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < xd.rows(); ++r)
      if (xd(r, c) > xd(best, c)) best = r;
    arg[static_cast<std::size_t>(c)] = best;
    out(0, c) = xd(best, c);
  }
  const Value inputs[] = {x};
  return tape_of(x).record(std::move(out), inputs, [x, arg = std::move(arg)](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < g.cols(); ++c) dx(arg[static_cast<std::size_t>(c)], c) = g(0, c);
    t.accumulate(x, dx);
  });
}

}  // namespace pcd::ad
