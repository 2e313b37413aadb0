#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "support.hpp"

#include "pcd/coreset.hpp"
#include "pcd/error.hpp"

using namespace pcd;

namespace {

LabeledDataset labels_only(const std::vector<int>& labels, int classes) {
  LabeledDataset ds;
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (int l : labels) ds.push_back(PointCloud(Matrix::Zero(1, 3)), l);
  return ds;
}

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

double coverage_radius(const Matrix& e, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& centers) {
  double worst = 0.0;
  for (std::size_t r : rows) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : centers)
      best = std::min(best, (e.row(static_cast<Eigen::Index>(r)) - e.row(static_cast<Eigen::Index>(c))).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("herding 1-D example") {
  const Matrix e = column({0, 1, 10});
  const std::vector<std::size_t> rows{0, 1, 2};
  CHECK(herding_order(e, rows, 2) == std::vector<std::size_t>{1, 2});
  CHECK(kcenter_order(e, rows, 2) == std::vector<std::size_t>{1, 2});
  CHECK(herding_order(e, rows, 1) == kcenter_order(e, rows, 1));
}

TEST_CASE("ties pick the lowest index") {
  const Matrix e = Matrix::Constant(5, 3, 0.25);
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4};
  CHECK(herding_order(e, rows, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(kcenter_order(e, rows, 3) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("herding with the whole class reproduces the class mean") {
  Rng rng(1);
  const Matrix e = testing::random_matrix(rng, 7, 4);
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6};
  const auto picked = herding_order(e, rows, 7);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(4);
  for (std::size_t r : picked) mean += e.row(static_cast<Eigen::Index>(r));
  CHECK((mean / 7.0 - e.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("herding objective never increases at the chosen step") {
  Rng rng(2);
  const Matrix e = testing::random_matrix(rng, 12, 3);
  std::vector<std::size_t> rows(12);
  for (std::size_t i = 0; i < 12; ++i) rows[i] = i;
  const Eigen::RowVectorXd mu = e.colwise().mean();
  const auto picked = herding_order(e, rows, 6);
  for (std::size_t k = 0; k < picked.size(); ++k) {
    // The chosen element minimizes the gap among all candidates at step k.
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3);
    for (std::size_t j = 0; j < k; ++j) sum += e.row(static_cast<Eigen::Index>(picked[j]));
    const auto gap = [&](std::size_t r) {
      return (mu - (sum + e.row(static_cast<Eigen::Index>(r))) / static_cast<double>(k + 1)).norm();
    };
    for (std::size_t r = 0; r < 12; ++r)
      if (std::find(picked.begin(), picked.begin() + static_cast<long>(k), r) == picked.begin() + static_cast<long>(k))
        CHECK(gap(picked[k]) <= gap(r));
  }
}

TEST_CASE("k-center examples and the 2-approximation bound") {
  const Matrix line = column({0, 1, 2, 3, 4, 5, 6, 7, 8});
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto picked = kcenter_order(line, all, 3);
  CHECK(std::find(picked.begin(), picked.end(), 0) != picked.end());
  CHECK(std::find(picked.begin(), picked.end(), 8) != picked.end());

  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix e = testing::random_matrix(rng, 10, 2);
    std::vector<std::size_t> rows(10);
    for (std::size_t i = 0; i < 10; ++i) rows[i] = i;
    const std::size_t k = 3;
    const double greedy = coverage_radius(e, rows, kcenter_order(e, rows, k));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = a + 1; b < 10; ++b)
        for (std::size_t c = b + 1; c < 10; ++c) best = std::min(best, coverage_radius(e, rows, {a, b, c}));
    CHECK(greedy <= 2.0 * best + 1e-12);
  }
}

TEST_CASE("select_random") {
  const LabeledDataset ds = labels_only({0, 1, 0, 1, 0, 1}, 2);
  const auto full = select_random(ds, 3, 4);
  auto c0 = full.selected[0];
  std::sort(c0.begin(), c0.end());
  CHECK(c0 == std::vector<std::size_t>{0, 2, 4});
  CHECK(select_random(ds, 2, 9).selected == select_random(ds, 2, 9).selected);
  try {
    select_random(ds, 4, 1);
    FAIL("expected a selection error");
  } catch (const Error& e) {
    CHECK(e.domain() == ErrorDomain::selection);
    CHECK(std::string(e.what()).find("c0") != std::string::npos);
  }
}

TEST_CASE("select_random is uniform (chi-square)") {
  std::vector<int> labels(10, 0);
  const LabeledDataset ds = labels_only(labels, 1);
  std::vector<double> counts(10, 0.0);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) counts[select_random(ds, 1, static_cast<std::uint64_t>(s)).selected[0][0]] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  // 99% quantile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 21.666);
}

TEST_CASE("selection result invariants and index file") {
  const LabeledDataset ds = testing::random_dataset(4, 3, 6, 12);
  ExtractorConfig cfg;
  cfg.widths = {3, 16, 8};
  for (auto m : {SelectionMethod::random, SelectionMethod::herding, SelectionMethod::kcenter}) {
    const SelectionResult r = select(m, ds, 4, 5, cfg);
    REQUIRE(r.selected.size() == 3);
    for (int c = 0; c < 3; ++c) {
      auto v = r.selected[static_cast<std::size_t>(c)];
      CHECK(v.size() == 4);
      for (std::size_t i : v) CHECK(ds.labels[i] == c);
      std::sort(v.begin(), v.end());
      CHECK(std::adjacent_find(v.begin(), v.end()) == v.end());
    }
    const SelectionResult back = SelectionResult::from_index_file(r.to_index_file());
    CHECK(back.selected == r.selected);
    CHECK(r.subset(ds).size() == 12);
  }
  CHECK(select(SelectionMethod::herding, ds, 1, 5, cfg).selected ==
        select(SelectionMethod::kcenter, ds, 1, 5, cfg).selected);
  CHECK(SelectionResult::from_index_file("0 1 2\n1 3 4\n").selected[1] == std::vector<std::size_t>{3, 4});
  CHECK_THROWS_AS(SelectionResult::from_index_file("0 x\n"), Error);
}
