#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcd/featnet.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

// selected[c] holds the dataset indices picked for class c, in pick order.
struct SelectionResult {
  std::vector<std::vector<std::size_t>> selected;

  // One line per class: "<class> <i1> <i2> ...".
  std::string to_index_file() const;
  static SelectionResult from_index_file(std::string_view text);
  LabeledDataset subset(const LabeledDataset& ds) const;
};

enum class SelectionMethod { random, herding, kcenter };
std::string_view selection_name(SelectionMethod m);
SelectionMethod parse_selection(std::string_view name);

SelectionResult select_random(const LabeledDataset& ds, std::size_t ppc, std::uint64_t seed);

// One embedding row per dataset item.
SelectionResult select_herding(const LabeledDataset& ds, std::size_t ppc, const Matrix& embeddings);
SelectionResult select_kcenter(const LabeledDataset& ds, std::size_t ppc, const Matrix& embeddings);

// Pooled features of every item under one seeded random extractor.
Matrix pooled_embeddings(const LabeledDataset& ds, const ExtractorConfig& cfg, std::uint64_t seed);

// Greedy selection on one class. `rows` are embedding row indices.
std::vector<std::size_t> herding_order(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                                       std::size_t k);
std::vector<std::size_t> kcenter_order(const Matrix& embeddings, const std::vector<std::size_t>& rows,
                                       std::size_t k);

// Dispatch used by the CLI and by distillation initialization.
SelectionResult select(SelectionMethod method, const LabeledDataset& ds, std::size_t ppc,
                       std::uint64_t seed, const ExtractorConfig& embed_cfg);

}  // namespace pcd
