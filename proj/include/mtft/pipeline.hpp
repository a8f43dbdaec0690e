#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <random>

#include "mtft/association.hpp"
#include "mtft/convlstm.hpp"
#include "mtft/gm.hpp"
#include "mtft/metrics.hpp"
#include "mtft/mot_io.hpp"
#include "mtft/simulate.hpp"
#include "mtft/update.hpp"

namespace mtft {

// Flat configuration; config files use exactly these field names as keys.
struct PipelineConfig {
  // grid
  double sampling_period = 10.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double extent_x = 0.0;  // 0: adopt the sequence extent
  double extent_y = 0.0;
  int border = 5;
  // predictor
  int batch_size = 24;
  int epochs = 20;
  int filters = 16;
  LossKind loss = LossKind::kKL;
  bool relu_output = true;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double l2_kernel = 1e-4;
  // measurement update
  double p_d = 0.9;
  double clutter_rate = 2.0;
  double r_diag = 10.0;
  double w_span = 1.0;
  double h_span = 1.0;
  double omega_t = 0.5;
  double sigma_birth = 20.0;
  double omega_birth = 0.5;
  double birth_box_w = 30.0;  // orphan peaks only; measurement births carry
  double birth_box_h = 30.0;  // their own box
  // mixture hygiene
  double truncate_thresh = 1e-5;
  double merge_dist = 4.0;
  double min_separation_cells = 3.0;
  double position_var_floor = -1.0;  // < 0: sampling_period^2
  // association
  int a_t = 5;
  int a_birth = 5;
  int a_at = 2;
  int a_am = 1;
  bool forbid_nonnegative = true;
  bool coast_decaying = true;
  std::uint64_t seed = 0;

  GridSpec make_grid(double seq_extent_x, double seq_extent_y) const;
  UpdateConfig make_update(const GridSpec& grid) const;
  AssocConfig make_assoc() const;
};

// key=value per line, '#' comments; keys must match PipelineConfig fields.
PipelineConfig parse_config(const std::filesystem::path& file);

struct PipelineState {
  GridSpec grid;
  TargetSet targets;  // carried association memory (includes decaying tracks)
  PhdMap prev_phd;    // v_{k-1}, rendered from the mature subset
  PddBatch batch;
  ConvLstmParams params;
  AdamState opt;
  std::mt19937_64 rng;
  std::int64_t label_counter = 0;
  int frame = 0;
  std::map<std::int64_t, int> submature_streak;
  TrainRecord last_train;
};

PipelineState init_pipeline(const PipelineConfig& cfg, double seq_extent_x,
                            double seq_extent_y);

// One frame: predict -> post-process -> peaks -> births -> update ->
// select -> associate -> extract. Returns the mature (reported) set.
// On error the state is left at its pre-frame value and the exception names
// the stage and frame.
TargetSet step(PipelineState& state, const PipelineConfig& cfg,
               const MeasurementSet& z);

struct RunOptions {
  std::optional<std::filesystem::path> dump_dir;  // per-frame PGM maps
};

struct RunResult {
  Timeline tracks;
  bool has_gt = false;
  MotScores mot;
  OspaResult ospa_mean;
  std::vector<OspaResult> ospa_frames;
};

RunResult run(const PipelineConfig& cfg, const SequenceData& seq,
              const std::optional<Timeline>& gt, const RunOptions& opts = {});

// name, OSPA, OSPA-Loc, OSPA-Card, Rcll, Prcn, MOTA, MOTAL
std::string report_row(const std::string& name, const RunResult& result);
std::string report_header();

}  // namespace mtft
