#include "mtft/convlstm.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace mtft {

namespace {

// out(i, j) = sum_{a,b} k(a, b) * x(i + a - 1, j + b - 1), zero-padded.
void conv3_same_acc(const Kernel3& k, const Grid& x, Grid& out) {
  const Eigen::Index r = x.rows(), c = x.cols();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double w = k(a, b);
      if (w == 0.0) continue;
      const int dr = a - 1, dc = b - 1;
      const Eigen::Index ro = dr < 0 ? -dr : 0, co = dc < 0 ? -dc : 0;
      const Eigen::Index ri = dr > 0 ? dr : 0, ci = dc > 0 ? dc : 0;
      out.block(ro, co, r - std::abs(dr), c - std::abs(dc)) +=
          w * x.block(ri, ci, r - std::abs(dr), c - std::abs(dc));
    }
  }
}

Kernel3 flip180(const Kernel3& k) {
  Kernel3 f;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) f(a, b) = k(2 - a, 2 - b);
  }
  return f;
}

// dk(a, b) = sum_{i,j} dout(i, j) * x(i + a - 1, j + b - 1).
Kernel3 conv3_kernel_grad(const Grid& dout, const Grid& x) {
  const Eigen::Index r = x.rows(), c = x.cols();
  Kernel3 dk;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const int dr = a - 1, dc = b - 1;
      const Eigen::Index ro = dr < 0 ? -dr : 0, co = dc < 0 ? -dc : 0;
      const Eigen::Index ri = dr > 0 ? dr : 0, ci = dc > 0 ? dc : 0;
      dk(a, b) = (dout.block(ro, co, r - std::abs(dr), c - std::abs(dc)) *
                  x.block(ri, ci, r - std::abs(dr), c - std::abs(dc)))
                     .sum();
    }
  }
  return dk;
}

Grid sigmoid(const Grid& x) { return 1.0 / (1.0 + (-x).exp()); }

struct StepCache {
  Field i, f, g, o, c, tanh_c;
};

// Shared forward step; fills the cache when given one.
ConvLstmState step_impl(const ConvLstmParams& p, const Grid& x,
                        const ConvLstmState& s, StepCache* cache) {
  const int nf = p.filters;
  const Eigen::Index r = x.rows(), c = x.cols();

  Field pre[4];
  for (int gate = 0; gate < 4; ++gate) {
    pre[gate].assign(nf, Grid());
    for (int f = 0; f < nf; ++f) {
      Grid acc = Grid::Constant(r, c, p.gates[gate].bias[f]);
      conv3_same_acc(p.gates[gate].input[f], x, acc);
      for (int g = 0; g < nf; ++g) {
        conv3_same_acc(p.gates[gate].hidden[f][g], s.h[g], acc);
      }
      pre[gate][f] = std::move(acc);
    }
  }

  ConvLstmState next;
  next.h.resize(nf);
  next.c.resize(nf);
  if (cache) {
    cache->i.resize(nf);
    cache->f.resize(nf);
    cache->g.resize(nf);
    cache->o.resize(nf);
    cache->c.resize(nf);
    cache->tanh_c.resize(nf);
  }
  for (int f = 0; f < nf; ++f) {
    Grid gi = sigmoid(pre[0][f]);
    Grid gf = sigmoid(pre[1][f]);
    Grid gg = pre[2][f].tanh();
    Grid go = sigmoid(pre[3][f]);
    next.c[f] = gf * s.c[f] + gi * gg;
    Grid tc = next.c[f].tanh();
    next.h[f] = go * tc;
    if (cache) {
      cache->i[f] = std::move(gi);
      cache->f[f] = std::move(gf);
      cache->g[f] = std::move(gg);
      cache->o[f] = std::move(go);
      cache->c[f] = next.c[f];
      cache->tanh_c[f] = std::move(tc);
    }
  }
  return next;
}

Grid readout(const ConvLstmParams& p, const Field& h) {
  Grid y = Grid::Constant(h[0].rows(), h[0].cols(), p.readout_b);
  for (int f = 0; f < p.filters; ++f) y += p.readout_w[f] * h[f];
  return y;
}

// The shift-normalised losses are scale-blind, so absolute PDD magnitudes
// (densities, ~1e-4) carry no useful units and would drown under the gate
// biases. Every map enters the recurrence scaled to unit RMS instead.
Grid unit_rms(const Grid& x) {
  const double rms = std::sqrt(x.square().mean());
  return rms > 1e-12 ? Grid(x / rms) : x;
}

constexpr double kShiftEps = 1e-8;

struct ShiftNorm {
  Grid bar;       // shifted and normalised
  double sum;     // normaliser
  Eigen::Index argmin_r = 0, argmin_c = 0;
};

ShiftNorm shift_normalize(const Grid& x) {
  ShiftNorm n;
  double mn = x(0, 0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) < mn) mn = x(i, j);
    }
  }
  // Row-major first occurrence breaks ties deterministically.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(i, j) == mn) {
        n.argmin_r = i;
        n.argmin_c = j;
        found = true;
        break;
      }
    }
    if (found) break;
  }
  n.bar = x - mn + kShiftEps;
  n.sum = n.bar.sum();
  n.bar /= n.sum;
  return n;
}

double kl_of(const Grid& t_bar, const Grid& p_bar) {
  return (t_bar * (t_bar / p_bar).log()).sum();
}

}  // namespace

std::size_t ConvLstmParams::param_count() const {
  const std::size_t f = static_cast<std::size_t>(filters);
  return 4 * (f * 9 + f * f * 9 + f) + f + 1;
}

Eigen::VectorXd ConvLstmParams::flatten() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index k = 0;
  for (int gate = 0; gate < 4; ++gate) {
    for (int f = 0; f < filters; ++f) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) flat[k++] = gates[gate].input[f](a, b);
      }
    }
    for (int f = 0; f < filters; ++f) {
      for (int g = 0; g < filters; ++g) {
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) flat[k++] = gates[gate].hidden[f][g](a, b);
        }
      }
    }
    for (int f = 0; f < filters; ++f) flat[k++] = gates[gate].bias[f];
  }
  for (int f = 0; f < filters; ++f) flat[k++] = readout_w[f];
  flat[k++] = readout_b;
  return flat;
}

void ConvLstmParams::unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count()) {
    throw std::invalid_argument("ConvLstmParams: flat size mismatch");
  }
  Eigen::Index k = 0;
  for (int gate = 0; gate < 4; ++gate) {
    for (int f = 0; f < filters; ++f) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) gates[gate].input[f](a, b) = flat[k++];
      }
    }
    for (int f = 0; f < filters; ++f) {
      for (int g = 0; g < filters; ++g) {
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) gates[gate].hidden[f][g](a, b) = flat[k++];
        }
      }
    }
    for (int f = 0; f < filters; ++f) gates[gate].bias[f] = flat[k++];
  }
  for (int f = 0; f < filters; ++f) readout_w[f] = flat[k++];
  readout_b = flat[k++];
}

ConvLstmParams zero_params(int filters) {
  if (filters < 1) throw std::invalid_argument("zero_params: filters must be >= 1");
  ConvLstmParams p;
  p.filters = filters;
  for (int gate = 0; gate < 4; ++gate) {
    p.gates[gate].input.assign(filters, Kernel3::Zero());
    p.gates[gate].hidden.assign(filters, std::vector<Kernel3>(filters, Kernel3::Zero()));
    p.gates[gate].bias = Eigen::VectorXd::Zero(filters);
  }
  p.readout_w = Eigen::VectorXd::Zero(filters);
  p.readout_b = 0.0;
  return p;
}

ConvLstmParams make_params(int filters, std::uint64_t seed) {
  ConvLstmParams p = zero_params(filters);
  std::mt19937_64 rng(seed);
  auto uni = [&rng](double s) {
    return (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * s;
  };
  const double s_in = 1.0 / 3.0;                          // fan_in = 9
  const double s_hid = 1.0 / std::sqrt(9.0 * filters);    // fan_in = 9F
  const double s_read = 1.0 / std::sqrt(static_cast<double>(filters));
  for (int gate = 0; gate < 4; ++gate) {
    for (int f = 0; f < filters; ++f) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) p.gates[gate].input[f](a, b) = uni(s_in);
      }
      for (int g = 0; g < filters; ++g) {
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) p.gates[gate].hidden[f][g](a, b) = uni(s_hid);
        }
      }
    }
  }
  p.gates[1].bias.setOnes();  // forget gate opens the memory path early on
  for (int f = 0; f < filters; ++f) p.readout_w[f] = uni(s_read);
  return p;
}

ConvLstmState zero_state(int filters, Eigen::Index rows, Eigen::Index cols) {
  ConvLstmState s;
  s.h.assign(filters, Grid::Zero(rows, cols));
  s.c.assign(filters, Grid::Zero(rows, cols));
  return s;
}

void PddBatch::push(const PddMap& map) {
  if (maps.empty() && grid.extent_x == 0.0 && grid.extent_y == 0.0) {
    grid = map.grid;
  }
  if (!(map.grid == grid)) throw std::invalid_argument("PddBatch: grid mismatch");
  maps.push_back(map.values);
  while (maps.size() > capacity) maps.pop_front();
}

ConvLstmState forward_step(const ConvLstmParams& p, const Grid& x,
                           const ConvLstmState& s) {
  return step_impl(p, x, s, nullptr);
}

Grid predict(const ConvLstmParams& p, const PddBatch& batch, bool relu_output) {
  if (batch.maps.empty()) throw std::invalid_argument("predict: empty batch");
  ConvLstmState s = zero_state(p.filters, batch.maps.front().rows(),
                               batch.maps.front().cols());
  for (const Grid& x : batch.maps) s = step_impl(p, unit_rms(x), s, nullptr);
  Grid y = readout(p, s.h);
  if (relu_output) y = y.max(0.0);
  return y;
}

double kl_loss(const Grid& pred, const Grid& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("kl_loss: shape mismatch");
  }
  const ShiftNorm p = shift_normalize(pred);
  const ShiftNorm t = shift_normalize(target);
  return kl_of(t.bar, p.bar);
}

double jsd_loss(const Grid& pred, const Grid& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("jsd_loss: shape mismatch");
  }
  const ShiftNorm p = shift_normalize(pred);
  const ShiftNorm t = shift_normalize(target);
  return kl_of(t.bar, p.bar) + kl_of(p.bar, t.bar);
}

std::pair<ConvLstmParams, double> grad(const ConvLstmParams& p,
                                       const PddBatch& batch,
                                       const Grid& target, LossKind loss,
                                       bool relu_output, double l2_kernel,
                                       double scale) {
  if (batch.maps.empty()) throw std::invalid_argument("grad: empty batch");
  const Eigen::Index r = batch.maps.front().rows();
  const Eigen::Index c = batch.maps.front().cols();
  const int nf = p.filters;
  const std::size_t steps = batch.maps.size();

  // Forward with caches; h_hist[t] is the hidden state entering step t.
  std::vector<Grid> xn;
  xn.reserve(steps);
  for (const Grid& x : batch.maps) xn.push_back(unit_rms(x));
  std::vector<StepCache> caches(steps);
  std::vector<Field> h_hist(steps + 1);
  std::vector<Field> c_hist(steps + 1);
  ConvLstmState s = zero_state(nf, r, c);
  h_hist[0] = s.h;
  c_hist[0] = s.c;
  for (std::size_t t = 0; t < steps; ++t) {
    s = step_impl(p, xn[t], s, &caches[t]);
    h_hist[t + 1] = s.h;
    c_hist[t + 1] = s.c;
  }
  Grid y_pre = readout(p, s.h);
  Grid y = relu_output ? Grid(y_pre.max(0.0)) : y_pre;

  // Loss and its gradient in the raw prediction.
  const ShiftNorm pn = shift_normalize(y);
  const ShiftNorm tn = shift_normalize(target);
  const double data_loss =
      loss == LossKind::kKL ? kl_of(tn.bar, pn.bar)
                            : kl_of(tn.bar, pn.bar) + kl_of(pn.bar, tn.bar);

  Grid dl_dbar = -tn.bar / pn.bar;
  if (loss == LossKind::kJSD) dl_dbar += (pn.bar / tn.bar).log() + 1.0;
  // Through the normaliser: ds = (g - <g, p_bar>) / sum.
  const double inner = (dl_dbar * pn.bar).sum();
  Grid ds = (dl_dbar - inner) / pn.sum;
  // Through the shift: the argmin cell collects minus the total.
  const double ds_total = ds.sum();
  Grid dy = ds;
  dy(pn.argmin_r, pn.argmin_c) -= ds_total;
  dy *= scale;
  if (relu_output) dy *= (y_pre > 0.0).cast<double>();

  ConvLstmParams grads = zero_params(nf);

  // Read-out backward.
  Field dh(nf);
  for (int f = 0; f < nf; ++f) {
    grads.readout_w[f] = (dy * s.h[f]).sum();
    dh[f] = p.readout_w[f] * dy;
  }
  grads.readout_b = dy.sum();

  Field dc(nf, Grid::Zero(r, c));
  for (std::size_t ts = steps; ts-- > 0;) {
    const StepCache& cc = caches[ts];
    const Field& h_prev = h_hist[ts];
    const Field& c_prev = c_hist[ts];
    const Grid& x = xn[ts];

    Field da[4];
    for (int gate = 0; gate < 4; ++gate) da[gate].resize(nf);
    Field dh_prev(nf, Grid::Zero(r, c));
    Field dc_prev(nf);

    for (int f = 0; f < nf; ++f) {
      Grid d_o = dh[f] * cc.tanh_c[f];
      da[3][f] = d_o * cc.o[f] * (1.0 - cc.o[f]);
      Grid dcf = dc[f] + dh[f] * cc.o[f] * (1.0 - cc.tanh_c[f].square());
      Grid d_f = dcf * c_prev[f];
      da[1][f] = d_f * cc.f[f] * (1.0 - cc.f[f]);
      Grid d_i = dcf * cc.g[f];
      da[0][f] = d_i * cc.i[f] * (1.0 - cc.i[f]);
      Grid d_g = dcf * cc.i[f];
      da[2][f] = d_g * (1.0 - cc.g[f].square());
      dc_prev[f] = dcf * cc.f[f];
    }

    for (int gate = 0; gate < 4; ++gate) {
      for (int f = 0; f < nf; ++f) {
        grads.gates[gate].input[f] += conv3_kernel_grad(da[gate][f], x);
        grads.gates[gate].bias[f] += da[gate][f].sum();
        for (int g = 0; g < nf; ++g) {
          grads.gates[gate].hidden[f][g] += conv3_kernel_grad(da[gate][f], h_prev[g]);
          conv3_same_acc(flip180(p.gates[gate].hidden[f][g]), da[gate][f], dh_prev[g]);
        }
      }
    }
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }

  if (l2_kernel != 0.0) {
    for (int gate = 0; gate < 4; ++gate) {
      for (int f = 0; f < nf; ++f) {
        grads.gates[gate].input[f] += l2_kernel * p.gates[gate].input[f];
        for (int g = 0; g < nf; ++g) {
          grads.gates[gate].hidden[f][g] += l2_kernel * p.gates[gate].hidden[f][g];
        }
      }
    }
    grads.readout_w += l2_kernel * p.readout_w;
  }
  return {std::move(grads), data_loss};
}

AdamState make_adam(const ConvLstmParams& p, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = Eigen::VectorXd::Zero(p.param_count());
  s.v = Eigen::VectorXd::Zero(p.param_count());
  return s;
}

void adam_step(ConvLstmParams& p, const ConvLstmParams& grads, AdamState& opt) {
  Eigen::VectorXd theta = p.flatten();
  const Eigen::VectorXd g = grads.flatten();
  if (theta.size() != opt.m.size()) {
    throw std::invalid_argument("adam_step: state size mismatch");
  }
  ++opt.t;
  opt.m = opt.cfg.beta1 * opt.m + (1.0 - opt.cfg.beta1) * g;
  opt.v = opt.cfg.beta2 * opt.v + (1.0 - opt.cfg.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(opt.cfg.beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(opt.cfg.beta2, static_cast<double>(opt.t));
  theta -= opt.cfg.lr *
           ((opt.m / bc1).array() / ((opt.v / bc2).array().sqrt() + opt.cfg.eps))
               .matrix();
  p.unflatten(theta);
}

TrainRecord train_online(ConvLstmParams& p, AdamState& opt,
                         const PddBatch& inputs, const Grid& target,
                         int epochs, LossKind loss, bool relu_output,
                         double l2_kernel) {
  TrainRecord rec;
  rec.epoch_loss.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    auto [g, data_loss] = grad(p, inputs, target, loss, relu_output, l2_kernel);
    if (!std::isfinite(data_loss)) {
      throw std::runtime_error("train_online: diverged at epoch " + std::to_string(e + 1));
    }
    adam_step(p, g, opt);
    rec.epoch_loss.push_back(data_loss);
  }
  return rec;
}

void save_params(std::ostream& os, const ConvLstmParams& p) {
  os.precision(17);
  os << "mtft-convlstm 1\n" << p.filters << "\n";
  const Eigen::VectorXd flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) os << flat[i] << "\n";
}

ConvLstmParams load_params(std::istream& is) {
  std::string magic;
  int version = 0, filters = 0;
  is >> magic >> version >> filters;
  if (!is || magic != "mtft-convlstm" || version != 1 || filters < 1) {
    throw std::runtime_error("load_params: bad checkpoint header");
  }
  ConvLstmParams p = zero_params(filters);
  Eigen::VectorXd flat(p.param_count());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (!(is >> flat[i])) throw std::runtime_error("load_params: truncated checkpoint");
  }
  p.unflatten(flat);
  return p;
}

}  // namespace mtft
