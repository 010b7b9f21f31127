#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ap/common/rng.hpp"
#include "ap/policy/network.hpp"

namespace ap::policy {

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t truncation = 64;  // BPTT window, steps
  std::size_t batch = 16;       // windows per update
  std::size_t burn_in = 64;     // steps run without gradient before each window
  double learning_rate = 1e-3;
  double clip_norm = 5.0;       // global gradient-norm clip, 0 disables

  void validate() const;
};

/// One episode in time order.
struct Sequence {
  std::vector<PolicyInput> inputs;
  std::vector<double> labels;  // mU/min
};

/// Mean / standard deviation of every input feature and of the labels.
Normalization fit_normalization(std::span<const Sequence> data);

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean normalized MSE per epoch
};

/// Truncated BPTT with Adam on the normalized MSE. Each epoch draws
/// ceil(total_steps / truncation) windows at random episode offsets.
/// Throws TrainingError on a non-finite loss.
TrainHistory train(PolicyNetwork& net, std::span<const Sequence> data, const TrainingConfig& cfg, Rng& rng);

}  // namespace ap::policy
