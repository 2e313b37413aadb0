#include <limits>
#include <sstream>

#include "pcd/coreset.hpp"
#include "pcd/error.hpp"
#include "pcd/random.hpp"

namespace pcd {
namespace {

std::vector<std::vector<std::size_t>> class_members(const LabeledDataset& ds, std::size_t ppc) {
  require(ppc >= 1, ErrorDomain::selection, "points per class must be at least 1");
  std::vector<std::vector<std::size_t>> members;
  for (int c = 0; c < ds.num_classes(); ++c) {
    members.push_back(ds.indices_of(c));
    require(members.back().size() >= ppc, ErrorDomain::selection,
            "class " + std::to_string(c) + " (" + ds.class_names[static_cast<std::size_t>(c)] +
                ") has " + std::to_string(members.back().size()) + " items, fewer than " +
                std::to_string(ppc));
  }
  return members;
}

void check_embeddings(const LabeledDataset& ds, const Matrix& embeddings) {
  require(static_cast<std::size_t>(embeddings.rows()) == ds.size(), ErrorDomain::selection,
          "one embedding row per dataset item required");
}

}  // namespace

std::string_view selection_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::random: return "random";
    case SelectionMethod::herding: return "herding";
    case SelectionMethod::kcenter: return "kcenter";
  }
  return "unknown";
}

SelectionMethod parse_selection(std::string_view name) {
  if (name == "random") return SelectionMethod::random;
  if (name == "herding") return SelectionMethod::herding;
  if (name == "kcenter") return SelectionMethod::kcenter;
  fail(ErrorDomain::config, "unknown selection method '" + std::string(name) + "'");
}

std::string SelectionResult::to_index_file() const {
  std::string out;
  for (std::size_t c = 0; c < selected.size(); ++c) {
    out += std::to_string(c);
    for (std::size_t i : selected[c]) out += " " + std::to_string(i);
    out += "\n";
  }
  return out;
}

SelectionResult SelectionResult::from_index_file(std::string_view text) {
  SelectionResult r;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::size_t cls = 0;
    if (!(ls >> cls)) continue;
    require(cls == r.selected.size(), ErrorDomain::format, "index file classes out of order");
    r.selected.emplace_back();
    std::size_t i = 0;
    while (ls >> i) r.selected.back().push_back(i);
    require(ls.eof(), ErrorDomain::format, "index file line " + std::to_string(r.selected.size()) + " is malformed");
  }
  return r;
}

LabeledDataset SelectionResult::subset(const LabeledDataset& ds) const {
  LabeledDataset out;
  out.class_names = ds.class_names;
  for (const auto& cls : selected)
    for (std::size_t i : cls) out.push_back(ds.clouds.at(i), ds.labels.at(i));
  return out;
}

SelectionResult select_random(const LabeledDataset& ds, std::size_t ppc, std::uint64_t seed) {
  const auto members = class_members(ds, ppc);
  SelectionResult r;
  for (std::size_t c = 0; c < members.size(); ++c) {
    Rng rng(derive_seed(seed, Stream::init, c));
    std::vector<std::size_t> picks;
    for (std::size_t k : rng.sample_without_replacement(members[c].size(), ppc))
      picks.push_back(members[c][k]);
    r.selected.push_back(std::move(picks));
  }
  return r;
}

std::vector<std::size_t> herding_order(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                                       std::size_t k) {
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(embeddings.cols());
  for (std::size_t r : rows) mu += embeddings.row(static_cast<Eigen::Index>(r));
  mu /= static_cast<double>(rows.size());

  std::vector<bool> taken(rows.size(), false);
  std::vector<std::size_t> picks;
  Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(embeddings.cols());
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = rows.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (taken[j]) continue;
      const Eigen::RowVectorXd candidate =
          (running + embeddings.row(static_cast<Eigen::Index>(rows[j]))) / static_cast<double>(step + 1);
      const double d = (mu - candidate).norm();
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    taken[best] = true;
    running += embeddings.row(static_cast<Eigen::Index>(rows[best]));
    picks.push_back(rows[best]);
  }
  return picks;
}

std::vector<std::size_t> kcenter_order(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                                       std::size_t k) {
  if (k == 0) return {};
  std::vector<std::size_t> picks = herding_order(embeddings, rows, 1);
  std::vector<bool> taken(rows.size(), false);
  std::vector<double> nearest(rows.size(), std::numeric_limits<double>::infinity());
  auto update = [&](std::size_t center) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j] == center) taken[j] = true;
      const double d = (embeddings.row(static_cast<Eigen::Index>(rows[j])) -
                        embeddings.row(static_cast<Eigen::Index>(center)))
                           .norm();
      nearest[j] = std::min(nearest[j], d);
    }
  };
  update(picks.front());
  while (picks.size() < k) {
    std::size_t best = rows.size();
    double best_dist = -1.0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (taken[j]) continue;
      if (nearest[j] > best_dist) {
        best_dist = nearest[j];
        best = j;
      }
    }
    picks.push_back(rows[best]);
    update(rows[best]);
  }
  return picks;
}

SelectionResult select_herding(const LabeledDataset& ds, std::size_t ppc, const Matrix& embeddings) {
  check_embeddings(ds, embeddings);
  SelectionResult r;
  for (const auto& members : class_members(ds, ppc))
    r.selected.push_back(herding_order(embeddings, members, ppc));
  return r;
}

SelectionResult select_kcenter(const LabeledDataset& ds, std::size_t ppc, const Matrix& embeddings) {
  check_embeddings(ds, embeddings);
  SelectionResult r;
  for (const auto& members : class_members(ds, ppc))
    r.selected.push_back(kcenter_order(embeddings, members, ppc));
  return r;
}

Matrix pooled_embeddings(const LabeledDataset& ds, const ExtractorConfig& cfg, std::uint64_t seed) {
  const NetworkWeights w = init_weights(cfg, seed);
  Matrix out(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(cfg.channels()));
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = extract_pooled(w, ds.clouds[i]);
  return out;
}

SelectionResult select(SelectionMethod method, const LabeledDataset& ds, std::size_t ppc,
                       std::uint64_t seed, const ExtractorConfig& embed_cfg) {
  switch (method) {
    case SelectionMethod::random: return select_random(ds, ppc, seed);
    case SelectionMethod::herding:
      return select_herding(ds, ppc, pooled_embeddings(ds, embed_cfg, derive_seed(seed, Stream::embed)));
    case SelectionMethod::kcenter:
      return select_kcenter(ds, ppc, pooled_embeddings(ds, embed_cfg, derive_seed(seed, Stream::embed)));
  }
  fail(ErrorDomain::config, "unknown selection method");
}

}  // namespace pcd
