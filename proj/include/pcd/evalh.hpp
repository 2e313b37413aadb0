#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcd/featnet.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

enum class Augmentation { none, random_rotation };
std::string_view augmentation_name(Augmentation a);
Augmentation parse_augmentation(std::string_view name);

struct EvalConfig {
  std::size_t epochs = 500;
  std::size_t batch = 8;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t lr_step = 250;
  double lr_decay = 0.1;
  std::size_t repeats = 10;
  std::vector<std::size_t> trunk_widths{3, 64, 128};
  std::size_t hidden = 64;
  bool include_input_transform = false;
  Augmentation augmentation = Augmentation::none;
  std::uint64_t seed = 0;
  // Threads used for independent repeats.
  std::size_t jobs = 1;

  void validate() const;
  ClassifierConfig classifier(int num_classes) const;
};

// Learning rate in effect during `epoch` (0-based).
double eval_lr(const EvalConfig& cfg, std::size_t epoch);

ClassifierWeights train_classifier(const LabeledDataset& train, const EvalConfig& cfg,
                                   std::uint64_t seed);

// Argmax prediction, ties to the lowest class index.
int predict(const ClassifierWeights& w, const PointCloud& cloud);
double evaluate_accuracy(const ClassifierWeights& w, const LabeledDataset& test);

struct EvalReport {
  std::vector<double> accuracies;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single repeat
  std::vector<double> per_class;  // mean over repeats
  double wall_seconds = 0.0;

  std::string to_json() const;
};

EvalReport repeated_eval(const LabeledDataset& train, const LabeledDataset& test,
                         const EvalConfig& cfg);

// Columns: dataset,method,ppc,seed,mean_acc,std_acc,wall_s
inline constexpr std::string_view kCsvHeader = "dataset,method,ppc,seed,mean_acc,std_acc,wall_s";
std::string csv_row(std::string_view dataset, std::string_view method, std::size_t ppc,
                    std::uint64_t seed, const EvalReport& report);

}  // namespace pcd
