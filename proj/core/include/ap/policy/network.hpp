#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ap/common/rng.hpp"

namespace ap::policy {

inline constexpr std::size_t kInputDim = 3;

struct Architecture {
  std::size_t layers = 3;       // stacked LSTM layers
  std::size_t hidden = 200;     // units per LSTM layer
  std::size_t head_units = 200; // fully-connected layer before the linear output
  double dropout = 0.2;
  double u_max = 100.0;         // outputs are clamped to [0, u_max]

  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Per-feature standardization of (u_prev, y, d_future) and of the label.
struct Normalization {
  std::array<double, kInputDim> in_mean{0.0, 0.0, 0.0};
  std::array<double, kInputDim> in_std{1.0, 1.0, 1.0};
  double out_mean = 0.0;
  double out_std = 1.0;
};

struct PolicyInput {
  double u_prev = 0.0;    // mU/min
  double y = 0.0;         // mg/dL
  double d_future = 0.0;  // g, carbohydrate announced N_p steps ahead
};

struct HiddenState {
  std::vector<Eigen::VectorXd> h, c;  // one entry per layer
};

enum class ForwardMode { kDeterministic, kMcDropout };

/// Batched recurrent state, one column per lane.
struct BatchState {
  std::vector<Eigen::MatrixXd> h, c;
};

class PolicyNetwork {
 public:
  PolicyNetwork() : PolicyNetwork(Architecture{}) {}
  /// Zero parameters; call init_weights before training.
  explicit PolicyNetwork(const Architecture& arch);

  void init_weights(Rng& rng);

  const Architecture& architecture() const noexcept { return arch_; }
  const Normalization& normalization() const noexcept { return norm_; }
  void set_normalization(const Normalization& n) noexcept { norm_ = n; }

  Eigen::VectorXd& parameters() noexcept { return theta_; }
  const Eigen::VectorXd& parameters() const noexcept { return theta_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(theta_.size()); }

  HiddenState initial_state() const;
  BatchState initial_batch(std::size_t lanes) const;

  Eigen::Vector3d normalize(const PolicyInput& in) const noexcept;
  double denormalize(double out) const noexcept;

  /// One recurrent step for all lanes. `x` is the normalized input (3 x lanes).
  /// State matrices have one column per lane or a single column shared by all
  /// lanes. `masks` null means no dropout. Returns the normalized outputs.
  Eigen::RowVectorXd step_batch(const BatchState& s, const Eigen::MatrixXd& x, BatchState& next, Rng* masks) const;

  /// Single forward: next hidden state and the insulin rate clamped to [0, u_max].
  std::pair<HiddenState, double> forward(const HiddenState& s, const PolicyInput& in, ForwardMode mode,
                                         Rng* rng = nullptr) const;

  void save(const std::filesystem::path& path) const;
  /// Loads a file; throws ShapeError if `expected` is given and differs.
  static PolicyNetwork load(const std::filesystem::path& path, const Architecture* expected = nullptr);

  // Offsets into the flat parameter vector.
  struct LayerSlots {
    std::size_t w = 0, b = 0, in = 0;
  };
  const std::vector<LayerSlots>& lstm_slots() const noexcept { return lstm_; }
  std::size_t head_w1() const noexcept { return w1_; }
  std::size_t head_b1() const noexcept { return b1_; }
  std::size_t head_w2() const noexcept { return w2_; }
  std::size_t head_b2() const noexcept { return b2_; }

 private:
  Architecture arch_;
  Normalization norm_;
  Eigen::VectorXd theta_;
  std::vector<LayerSlots> lstm_;
  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

/// A block of training windows: T steps x B lanes.
struct WindowBatch {
  std::vector<Eigen::MatrixXd> x;  // T entries of (3 x B), normalized
  Eigen::MatrixXd label;           // T x B, normalized
  BatchState init;                 // empty means zero state
};

/// Mean squared error over the block and, if `grad` is non-null, its gradient
/// with respect to the flat parameters by backpropagation through time. Dropout
/// masks are drawn from `masks` when non-null.
double sequence_loss(const PolicyNetwork& net, const WindowBatch& batch, Rng* masks, Eigen::VectorXd* grad);

/// n MC-dropout samples from the same state, sorted, clamped to [0, u_max].
std::vector<double> sample_predictive(const PolicyNetwork& net, const HiddenState& s, const PolicyInput& in,
                                      std::size_t n, Rng& rng);

/// One control-loop step: deterministic forward (which advances the persistent
/// state) plus n ephemeral MC-dropout samples.
struct PolicyStep {
  HiddenState next;
  double deterministic = 0.0;
  std::vector<double> samples;  // sorted
};
PolicyStep policy_step(const PolicyNetwork& net, const HiddenState& s, const PolicyInput& in, std::size_t n,
                       Rng& rng);

/// Dvoretzky-Kiefer-Wolfowitz bound P(sup|F_n - F| > eps) <= 2 exp(-2 n eps^2).
double dkw_bound(std::size_t n, double eps);

}  // namespace ap::policy
