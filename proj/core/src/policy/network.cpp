#include "ap/policy/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "ap/common/error.hpp"

namespace ap::policy {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

void Architecture::validate() const {
  if (layers < 1) throw ConfigError("policy: at least one recurrent layer is required");
  if (hidden < 1 || head_units < 1) throw ConfigError("policy: layer widths must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("policy: dropout must lie in [0, 1)");
  if (!(u_max > 0.0)) throw ConfigError("policy: u_max must be > 0");
}

PolicyNetwork::PolicyNetwork(const Architecture& arch) : arch_(arch) {
  arch_.validate();
  const std::size_t h = arch_.hidden;
  std::size_t off = 0;
  for (std::size_t l = 0; l < arch_.layers; ++l) {
    LayerSlots s;
    s.in = l == 0 ? kInputDim : h;
    s.w = off;
    off += 4 * h * (s.in + h);
    s.b = off;
    off += 4 * h;
    lstm_.push_back(s);
  }
  w1_ = off;
  off += arch_.head_units * h;
  b1_ = off;
  off += arch_.head_units;
  w2_ = off;
  off += arch_.head_units;
  b2_ = off;
  off += 1;
  theta_ = VectorXd::Zero(static_cast<Eigen::Index>(off));
}

void PolicyNetwork::init_weights(Rng& rng) {
  const double h = static_cast<double>(arch_.hidden);
  const double a = 1.0 / std::sqrt(h);
  for (const auto& s : lstm_) {
    const std::size_t n = 4 * arch_.hidden * (s.in + arch_.hidden);
    for (std::size_t i = 0; i < n; ++i) theta_[static_cast<Eigen::Index>(s.w + i)] = uniform(rng, -a, a);
    for (std::size_t i = 0; i < 4 * arch_.hidden; ++i) theta_[static_cast<Eigen::Index>(s.b + i)] = 0.0;
    // forget gate
    for (std::size_t i = arch_.hidden; i < 2 * arch_.hidden; ++i) theta_[static_cast<Eigen::Index>(s.b + i)] = 1.0;
  }
  const double a1 = 1.0 / std::sqrt(h);
  for (std::size_t i = 0; i < arch_.head_units * arch_.hidden; ++i)
    theta_[static_cast<Eigen::Index>(w1_ + i)] = uniform(rng, -a1, a1);
  for (std::size_t i = 0; i < arch_.head_units; ++i) theta_[static_cast<Eigen::Index>(b1_ + i)] = 0.0;
  const double a2 = 1.0 / std::sqrt(static_cast<double>(arch_.head_units));
  for (std::size_t i = 0; i < arch_.head_units; ++i) theta_[static_cast<Eigen::Index>(w2_ + i)] = uniform(rng, -a2, a2);
  theta_[static_cast<Eigen::Index>(b2_)] = 0.0;
}

HiddenState PolicyNetwork::initial_state() const {
  HiddenState s;
  s.h.assign(arch_.layers, VectorXd::Zero(static_cast<Eigen::Index>(arch_.hidden)));
  s.c = s.h;
  return s;
}

BatchState PolicyNetwork::initial_batch(std::size_t lanes) const {
  BatchState s;
  s.h.assign(arch_.layers, MatrixXd::Zero(static_cast<Eigen::Index>(arch_.hidden), static_cast<Eigen::Index>(lanes)));
  s.c = s.h;
  return s;
}

Eigen::Vector3d PolicyNetwork::normalize(const PolicyInput& in) const noexcept {
  return {(in.u_prev - norm_.in_mean[0]) / norm_.in_std[0], (in.y - norm_.in_mean[1]) / norm_.in_std[1],
          (in.d_future - norm_.in_mean[2]) / norm_.in_std[2]};
}

double PolicyNetwork::denormalize(double out) const noexcept { return out * norm_.out_std + norm_.out_mean; }

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

MatrixXd draw_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  if (rng == nullptr || p == 0.0) return {};
  MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(*rng, 0.0, 1.0) < p ? 0.0 : keep;
  return m;
}

MatrixXd apply(const MatrixXd& v, const MatrixXd& mask) { return mask.size() == 0 ? v : MatrixXd(v.cwiseProduct(mask)); }

struct LayerCache {
  MatrixXd mask, xin, h_prev, c_prev, i, f, g, o, c, tc;
};

struct StepCache {
  std::vector<LayerCache> layer;
  MatrixXd m0, a0, z1, m1, a1;
  Eigen::RowVectorXd out;
};

Eigen::RowVectorXd forward_step(const PolicyNetwork& net, const BatchState& s, const MatrixXd& x, Rng* rng,
                                BatchState& next, StepCache* cache) {
  const Architecture& arch = net.architecture();
  const auto& theta = net.parameters();
  const auto H = static_cast<Eigen::Index>(arch.hidden);
  const Eigen::Index B = x.cols();
  next.h.resize(arch.layers);
  next.c.resize(arch.layers);
  if (cache) cache->layer.resize(arch.layers);

  MatrixXd input = x;
  for (std::size_t l = 0; l < arch.layers; ++l) {
    const auto& slot = net.lstm_slots()[l];
    const auto in = static_cast<Eigen::Index>(slot.in);
    const CMap w(theta.data() + slot.w, 4 * H, in + H);
    const Eigen::Map<const VectorXd> b(theta.data() + slot.b, 4 * H);

    MatrixXd mask = draw_mask(in, B, arch.dropout, rng);
    MatrixXd xin = apply(input, mask);
    MatrixXd a = w.leftCols(in) * xin;
    if (s.h[l].cols() == B)
      a.noalias() += w.rightCols(H) * s.h[l];
    else
      a.colwise() += VectorXd(w.rightCols(H) * s.h[l]);
    a.colwise() += b;
    MatrixXd ig = a.topRows(H).unaryExpr(&sigmoid);
    MatrixXd fg = a.middleRows(H, H).unaryExpr(&sigmoid);
    MatrixXd gg = a.middleRows(2 * H, H).array().tanh().matrix();
    MatrixXd og = a.bottomRows(H).unaryExpr(&sigmoid);
    MatrixXd c = ig.cwiseProduct(gg);
    if (s.c[l].cols() == B)
      c += fg.cwiseProduct(s.c[l]);
    else
      c += fg.cwiseProduct(s.c[l].replicate(1, B));
    MatrixXd tc = c.array().tanh().matrix();
    next.h[l] = og.cwiseProduct(tc);
    next.c[l] = c;
    if (cache) {
      LayerCache& lc = cache->layer[l];
      lc.mask = std::move(mask);
      lc.xin = std::move(xin);
      lc.h_prev = s.h[l];
      lc.c_prev = s.c[l];
      lc.i = std::move(ig);
      lc.f = std::move(fg);
      lc.g = std::move(gg);
      lc.o = std::move(og);
      lc.c = std::move(c);
      lc.tc = std::move(tc);
    }
    input = next.h[l];
  }

  const auto F = static_cast<Eigen::Index>(arch.head_units);
  const CMap w1(theta.data() + net.head_w1(), F, H);
  const Eigen::Map<const VectorXd> b1(theta.data() + net.head_b1(), F);
  const Eigen::Map<const Eigen::RowVectorXd> w2(theta.data() + net.head_w2(), F);
  const double b2 = theta[static_cast<Eigen::Index>(net.head_b2())];

  MatrixXd m0 = draw_mask(H, B, arch.dropout, rng);
  MatrixXd a0 = apply(input, m0);
  MatrixXd z1 = w1 * a0;
  z1.colwise() += b1;
  MatrixXd r = z1.cwiseMax(0.0);
  MatrixXd m1 = draw_mask(F, B, arch.dropout, rng);
  MatrixXd a1 = apply(r, m1);
  Eigen::RowVectorXd out = (w2 * a1).array() + b2;
  if (cache) {
    cache->m0 = std::move(m0);
    cache->a0 = std::move(a0);
    cache->z1 = std::move(z1);
    cache->m1 = std::move(m1);
    cache->a1 = std::move(a1);
    cache->out = out;
  }
  return out;
}

void check_state(const PolicyNetwork& net, const BatchState& s, Eigen::Index lanes) {
  const Architecture& arch = net.architecture();
  if (s.h.size() != arch.layers || s.c.size() != arch.layers) throw ShapeError("policy: hidden state layer count mismatch");
  for (std::size_t l = 0; l < arch.layers; ++l) {
    if (s.h[l].rows() != static_cast<Eigen::Index>(arch.hidden) || (s.h[l].cols() != lanes && s.h[l].cols() != 1) ||
        s.c[l].rows() != s.h[l].rows() || s.c[l].cols() != s.h[l].cols())
      throw ShapeError("policy: hidden state shape mismatch");
  }
}

BatchState replicate(const HiddenState& s, std::size_t lanes) {
  BatchState b;
  for (std::size_t l = 0; l < s.h.size(); ++l) {
    b.h.push_back(s.h[l].replicate(1, static_cast<Eigen::Index>(lanes)));
    b.c.push_back(s.c[l].replicate(1, static_cast<Eigen::Index>(lanes)));
  }
  return b;
}

HiddenState column(const BatchState& b, Eigen::Index j) {
  HiddenState s;
  for (std::size_t l = 0; l < b.h.size(); ++l) {
    s.h.push_back(b.h[l].col(j));
    s.c.push_back(b.c[l].col(j));
  }
  return s;
}

}  // namespace

Eigen::RowVectorXd PolicyNetwork::step_batch(const BatchState& s, const MatrixXd& x, BatchState& next,
                                             Rng* masks) const {
  if (x.rows() != static_cast<Eigen::Index>(kInputDim)) throw ShapeError("policy: input must have 3 features");
  check_state(*this, s, x.cols());
  return forward_step(*this, s, x, masks, next, nullptr);
}

std::pair<HiddenState, double> PolicyNetwork::forward(const HiddenState& s, const PolicyInput& in, ForwardMode mode,
                                                      Rng* rng) const {
  if (mode == ForwardMode::kMcDropout && rng == nullptr)
    throw std::invalid_argument("forward: mc_dropout mode requires an rng");
  if (!std::isfinite(in.u_prev) || !std::isfinite(in.y) || !std::isfinite(in.d_future))
    throw std::invalid_argument("forward: non-finite input");
  const BatchState b = replicate(s, 1);
  BatchState next;
  const MatrixXd x = normalize(in);
  const Eigen::RowVectorXd out = step_batch(b, x, next, mode == ForwardMode::kMcDropout ? rng : nullptr);
  return {column(next, 0), std::clamp(denormalize(out[0]), 0.0, arch_.u_max)};
}

double sequence_loss(const PolicyNetwork& net, const WindowBatch& batch, Rng* masks, VectorXd* grad) {
  const Architecture& arch = net.architecture();
  const std::size_t T = batch.x.size();
  if (T == 0) throw ShapeError("sequence_loss: empty window");
  const Eigen::Index B = batch.x.front().cols();
  if (batch.label.rows() != static_cast<Eigen::Index>(T) || batch.label.cols() != B)
    throw ShapeError("sequence_loss: label block shape mismatch");

  BatchState state = batch.init.h.empty() ? net.initial_batch(static_cast<std::size_t>(B)) : batch.init;
  check_state(net, state, B);

  std::vector<StepCache> caches(grad ? T : 0);
  MatrixXd outs(static_cast<Eigen::Index>(T), B);
  for (std::size_t t = 0; t < T; ++t) {
    BatchState next;
    outs.row(static_cast<Eigen::Index>(t)) = forward_step(net, state, batch.x[t], masks, next, grad ? &caches[t] : nullptr);
    state = std::move(next);
  }
  const MatrixXd err = outs - batch.label;
  const double scale = 1.0 / (static_cast<double>(T) * static_cast<double>(B));
  const double loss = err.squaredNorm() * scale;
  if (!grad) return loss;

  const auto& theta = net.parameters();
  grad->setZero(theta.size());
  const auto H = static_cast<Eigen::Index>(arch.hidden);
  const auto F = static_cast<Eigen::Index>(arch.head_units);
  const CMap w1(theta.data() + net.head_w1(), F, H);
  const Eigen::Map<const Eigen::RowVectorXd> w2(theta.data() + net.head_w2(), F);
  Map gw1(grad->data() + net.head_w1(), F, H);
  Eigen::Map<VectorXd> gb1(grad->data() + net.head_b1(), F);
  Eigen::Map<Eigen::RowVectorXd> gw2(grad->data() + net.head_w2(), F);
  double& gb2 = (*grad)[static_cast<Eigen::Index>(net.head_b2())];

  std::vector<MatrixXd> dh_next(arch.layers, MatrixXd::Zero(H, B));
  std::vector<MatrixXd> dc_next(arch.layers, MatrixXd::Zero(H, B));

  for (std::size_t tt = T; tt-- > 0;) {
    StepCache& sc = caches[tt];
    const Eigen::RowVectorXd dout = 2.0 * scale * err.row(static_cast<Eigen::Index>(tt));
    gw2 += dout * sc.a1.transpose();
    gb2 += dout.sum();
    MatrixXd dz1 = apply(w2.transpose() * dout, sc.m1);
    dz1 = dz1.cwiseProduct((sc.z1.array() > 0.0).cast<double>().matrix());
    gw1 += dz1 * sc.a0.transpose();
    gb1 += dz1.rowwise().sum();
    MatrixXd dh = apply(w1.transpose() * dz1, sc.m0);

    for (std::size_t l = arch.layers; l-- > 0;) {
      const auto& slot = net.lstm_slots()[l];
      const auto in = static_cast<Eigen::Index>(slot.in);
      const CMap w(theta.data() + slot.w, 4 * H, in + H);
      Map gw(grad->data() + slot.w, 4 * H, in + H);
      Eigen::Map<VectorXd> gb(grad->data() + slot.b, 4 * H);
      const LayerCache& lc = sc.layer[l];

      dh += dh_next[l];
      const MatrixXd d_o = dh.cwiseProduct(lc.tc);
      MatrixXd dc = dc_next[l] + dh.cwiseProduct(lc.o).cwiseProduct((1.0 - lc.tc.array().square()).matrix());
      MatrixXd da(4 * H, B);
      da.topRows(H) = dc.cwiseProduct(lc.g).cwiseProduct((lc.i.array() * (1.0 - lc.i.array())).matrix());
      da.middleRows(H, H) = dc.cwiseProduct(lc.c_prev).cwiseProduct((lc.f.array() * (1.0 - lc.f.array())).matrix());
      da.middleRows(2 * H, H) = dc.cwiseProduct(lc.i).cwiseProduct((1.0 - lc.g.array().square()).matrix());
      da.bottomRows(H) = d_o.cwiseProduct((lc.o.array() * (1.0 - lc.o.array())).matrix());
      dc_next[l] = dc.cwiseProduct(lc.f);

      gw.leftCols(in) += da * lc.xin.transpose();
      gw.rightCols(H) += da * lc.h_prev.transpose();
      gb += da.rowwise().sum();
      dh_next[l] = w.rightCols(H).transpose() * da;
      if (l > 0) dh = apply(w.leftCols(in).transpose() * da, lc.mask);
    }
  }
  return loss;
}

std::vector<double> sample_predictive(const PolicyNetwork& net, const HiddenState& s, const PolicyInput& in,
                                      std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_predictive: n must be >= 1");
  const BatchState b = replicate(s, 1);
  BatchState next;
  const MatrixXd x = net.normalize(in).replicate(1, static_cast<Eigen::Index>(n));
  const Eigen::RowVectorXd out = net.step_batch(b, x, next, &rng);
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i)
    samples[i] = std::clamp(net.denormalize(out[static_cast<Eigen::Index>(i)]), 0.0, net.architecture().u_max);
  std::sort(samples.begin(), samples.end());
  return samples;
}

PolicyStep policy_step(const PolicyNetwork& net, const HiddenState& s, const PolicyInput& in, std::size_t n,
                       Rng& rng) {
  PolicyStep step;
  auto [next, u] = net.forward(s, in, ForwardMode::kDeterministic);
  step.next = std::move(next);
  step.deterministic = u;
  if (n > 0) step.samples = sample_predictive(net, s, in, n, rng);
  return step;
}

double dkw_bound(std::size_t n, double eps) {
  if (n < 1) throw std::invalid_argument("dkw_bound: n must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("dkw_bound: eps must be > 0");
  return 2.0 * std::exp(-2.0 * static_cast<double>(n) * eps * eps);
}

// Binary layout (little-endian host order):
//   "APNET\0\0\0", u32 version, u64 layers, hidden, head_units, f64 dropout, u_max,
//   f64 x8 normalization, u64 parameter count, f64 x count.
namespace {

constexpr char kMagic[8] = {'A', 'P', 'N', 'E', 'T', 0, 0, 0};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ShapeError("policy file truncated");
  return v;
}

}  // namespace

void PolicyNetwork::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, arch_.layers);
  put<std::uint64_t>(os, arch_.hidden);
  put<std::uint64_t>(os, arch_.head_units);
  put<double>(os, arch_.dropout);
  put<double>(os, arch_.u_max);
  for (double v : norm_.in_mean) put<double>(os, v);
  for (double v : norm_.in_std) put<double>(os, v);
  put<double>(os, norm_.out_mean);
  put<double>(os, norm_.out_std);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(theta_.size()));
  os.write(reinterpret_cast<const char*>(theta_.data()), static_cast<std::streamsize>(theta_.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

PolicyNetwork PolicyNetwork::load(const std::filesystem::path& path, const Architecture* expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ShapeError(path.string() + ": not a policy file");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw ShapeError(path.string() + ": unsupported version " + std::to_string(version));
  Architecture arch;
  arch.layers = get<std::uint64_t>(is);
  arch.hidden = get<std::uint64_t>(is);
  arch.head_units = get<std::uint64_t>(is);
  arch.dropout = get<double>(is);
  arch.u_max = get<double>(is);
  if (expected && !(*expected == arch)) throw ShapeError(path.string() + ": architecture mismatch");
  PolicyNetwork net(arch);
  Normalization n;
  for (double& v : n.in_mean) v = get<double>(is);
  for (double& v : n.in_std) v = get<double>(is);
  n.out_mean = get<double>(is);
  n.out_std = get<double>(is);
  net.norm_ = n;
  const auto count = get<std::uint64_t>(is);
  if (count != net.parameter_count()) throw ShapeError(path.string() + ": parameter count mismatch");
  is.read(reinterpret_cast<char*>(net.theta_.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ShapeError(path.string() + ": parameter block truncated");
  return net;
}

}  // namespace ap::policy
