#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <utility>

#include "mtft/grid.hpp"

namespace mtft {

using Kernel3 = Eigen::Matrix3d;
using Field = std::vector<Grid>;  // one 2-d map per filter

enum class LossKind { kKL, kJSD };

// Gate order everywhere: input, forget, cell, output.
struct GateParams {
  std::vector<Kernel3> input;                // [f], single input channel
  std::vector<std::vector<Kernel3>> hidden;  // [f][g]
  Eigen::VectorXd bias;                      // [f]
};

struct ConvLstmParams {
  int filters = 16;
  GateParams gates[4];
  Eigen::VectorXd readout_w;  // 1x1 read-out to one channel
  double readout_b = 0.0;

  std::size_t param_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

// Kernels uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; biases zero except
// the forget gate, which starts at one.
ConvLstmParams make_params(int filters, std::uint64_t seed);
ConvLstmParams zero_params(int filters);

struct ConvLstmState {
  Field h, c;
};
ConvLstmState zero_state(int filters, Eigen::Index rows, Eigen::Index cols);

// Rolling window of the most recent PDD maps, oldest first.
struct PddBatch {
  GridSpec grid;
  std::size_t capacity = 24;
  std::deque<Grid> maps;

  void push(const PddMap& map);
  bool full() const { return maps.size() >= capacity; }
};

ConvLstmState forward_step(const ConvLstmParams& p, const Grid& x,
                           const ConvLstmState& s);

// Many-to-one: each map is scaled to unit RMS on entry (the losses are
// scale-blind, so raw PDD magnitudes would vanish against the gate biases),
// the recurrence runs over the whole batch, and the final hidden state is
// read out through the 1x1 kernel, optionally clamped with ReLU.
Grid predict(const ConvLstmParams& p, const PddBatch& batch,
             bool relu_output = true);

// Both arrays are shifted by min + 1e-8 and normalised to unit sum before
// KL(target || pred); JSD is the symmetrised sum of both directions.
double kl_loss(const Grid& pred, const Grid& target);
double jsd_loss(const Grid& pred, const Grid& target);

// Analytic BPTT through the whole window, the read-out and the shift-and-
// normalise loss (including the argmin shift term). Returns the gradient
// (same container shape as the parameters) and the data loss. l2_kernel adds
// a quadratic penalty on every kernel to the gradient; scale multiplies the
// data-loss term.
std::pair<ConvLstmParams, double> grad(const ConvLstmParams& p,
                                       const PddBatch& batch,
                                       const Grid& target, LossKind loss,
                                       bool relu_output = true,
                                       double l2_kernel = 0.0,
                                       double scale = 1.0);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  Eigen::VectorXd m, v;
  long t = 0;
};

AdamState make_adam(const ConvLstmParams& p, const AdamConfig& cfg = {});
void adam_step(ConvLstmParams& p, const ConvLstmParams& grads, AdamState& opt);

struct TrainRecord {
  std::vector<double> epoch_loss;  // data loss at the start of each epoch
};

// Repeated grad + adam_step on the fixed (inputs -> target) pair. Throws
// when the loss stops being finite, reporting the epoch.
TrainRecord train_online(ConvLstmParams& p, AdamState& opt,
                         const PddBatch& inputs, const Grid& target,
                         int epochs, LossKind loss, bool relu_output = true,
                         double l2_kernel = 1e-4);

void save_params(std::ostream& os, const ConvLstmParams& p);
ConvLstmParams load_params(std::istream& is);

}  // namespace mtft
