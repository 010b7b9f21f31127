#include "ap/policy/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ap/common/error.hpp"

namespace ap::policy {

void TrainingConfig::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (truncation < 1) throw ConfigError("training: truncation must be >= 1");
  if (batch < 1) throw ConfigError("training: batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("training: learning_rate must be > 0");
  if (!(clip_norm >= 0.0)) throw ConfigError("training: clip_norm must be >= 0");
}

Normalization fit_normalization(std::span<const Sequence> data) {
  std::array<double, kInputDim> sum{}, sq{};
  double ls = 0.0, lsq = 0.0;
  std::size_t n = 0;
  for (const auto& seq : data) {
    for (std::size_t t = 0; t < seq.inputs.size(); ++t) {
      const std::array<double, kInputDim> f{seq.inputs[t].u_prev, seq.inputs[t].y, seq.inputs[t].d_future};
      for (std::size_t j = 0; j < kInputDim; ++j) {
        sum[j] += f[j];
        sq[j] += f[j] * f[j];
      }
      ls += seq.labels[t];
      lsq += seq.labels[t] * seq.labels[t];
      ++n;
    }
  }
  Normalization norm;
  if (n == 0) return norm;
  const double dn = static_cast<double>(n);
  auto spread = [dn](double s, double q) {
    const double var = q / dn - (s / dn) * (s / dn);
    return var > 1e-12 ? std::sqrt(var) : 1.0;
  };
  for (std::size_t j = 0; j < kInputDim; ++j) {
    norm.in_mean[j] = sum[j] / dn;
    norm.in_std[j] = spread(sum[j], sq[j]);
  }
  norm.out_mean = ls / dn;
  norm.out_std = spread(ls, lsq);
  return norm;
}

TrainHistory train(PolicyNetwork& net, std::span<const Sequence> data, const TrainingConfig& cfg, Rng& rng) {
  cfg.validate();
  std::size_t total = 0, shortest = SIZE_MAX;
  for (const auto& seq : data) {
    if (seq.inputs.size() != seq.labels.size()) throw ShapeError("train: inputs and labels differ in length");
    if (seq.inputs.empty()) continue;
    total += seq.inputs.size();
    shortest = std::min(shortest, seq.inputs.size());
  }
  if (total == 0) throw std::invalid_argument("train: empty dataset");

  const std::size_t T = std::min(cfg.truncation, shortest);
  const std::size_t windows = (total + T - 1) / T;
  const std::size_t B = std::min(cfg.batch, windows);
  const auto lanes = static_cast<Eigen::Index>(B);

  std::vector<std::size_t> eligible;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].inputs.size() < T) continue;
    eligible.push_back(i);
    acc += static_cast<double>(data[i].inputs.size());
    cumulative.push_back(acc);
  }

  const Eigen::Index P = net.parameters().size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(P), v = Eigen::VectorXd::Zero(P), grad(P);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  TrainHistory history;
  const Normalization& norm = net.normalization();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t updates = 0;
    for (std::size_t w0 = 0; w0 < windows; w0 += B) {
      WindowBatch batch;
      batch.x.assign(T, Eigen::MatrixXd(kInputDim, lanes));
      batch.label.resize(static_cast<Eigen::Index>(T), lanes);
      batch.init = net.initial_batch(B);
      for (Eigen::Index j = 0; j < lanes; ++j) {
        const double pick = uniform(rng, 0.0, acc);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const Sequence& seq = data[eligible[std::min<std::size_t>(it - cumulative.begin(), eligible.size() - 1)]];
        const std::size_t span = seq.inputs.size() - T + 1;
        // Offsets before the episode start clamp to 0 so every step is covered equally often.
        const double offset = uniform(rng, -static_cast<double>(T - 1), static_cast<double>(span));
        const std::size_t start = std::min(span - 1, static_cast<std::size_t>(std::max(0.0, std::floor(offset))));

        HiddenState s = net.initial_state();
        for (std::size_t k = start - std::min(start, cfg.burn_in); k < start; ++k)
          s = net.forward(s, seq.inputs[k], ForwardMode::kDeterministic).first;
        for (std::size_t l = 0; l < s.h.size(); ++l) {
          batch.init.h[l].col(j) = s.h[l];
          batch.init.c[l].col(j) = s.c[l];
        }
        for (std::size_t t = 0; t < T; ++t) {
          batch.x[t].col(j) = net.normalize(seq.inputs[start + t]);
          batch.label(static_cast<Eigen::Index>(t), j) = (seq.labels[start + t] - norm.out_mean) / norm.out_std;
        }
      }

      const double loss = sequence_loss(net, batch, &rng, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch + 1 << ", update " << updates + 1 << " (loss " << loss
            << ", lr " << cfg.learning_rate << ")";
        throw TrainingError(msg.str());
      }
      if (cfg.clip_norm > 0.0) {
        const double gn = grad.norm();
        if (gn > cfg.clip_norm) grad *= cfg.clip_norm / gn;
      }
      ++step;
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      net.parameters().array() -=
          cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      epoch_loss += loss;
      ++updates;
    }
    history.epoch_loss.push_back(epoch_loss / static_cast<double>(updates));
  }
  return history;
}

}  // namespace ap::policy
