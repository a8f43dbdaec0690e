#include "mtft/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mtft {

GridSpec PipelineConfig::make_grid(double seq_extent_x, double seq_extent_y) const {
  GridSpec g;
  g.origin_x = origin_x;
  g.origin_y = origin_y;
  g.extent_x = extent_x > 0.0 ? extent_x : seq_extent_x;
  g.extent_y = extent_y > 0.0 ? extent_y : seq_extent_y;
  g.ts = sampling_period;
  g.validate();
  return g;
}

UpdateConfig PipelineConfig::make_update(const GridSpec& grid) const {
  UpdateConfig u;
  u.H = Mat4::Identity();
  u.R = Mat4::Identity() * r_diag;
  u.p_d = p_d;
  u.clutter_rate = clutter_rate;
  u.area = grid.extent_x * grid.extent_y;
  u.w_span = w_span;
  u.h_span = h_span;
  u.omega_t = omega_t;
  u.birth.cov = Mat4::Identity() * sigma_birth;
  u.birth.weight = omega_birth;
  u.birth.age = a_birth;
  u.birth.motion = Vec2::Zero();
  return u;
}

AssocConfig PipelineConfig::make_assoc() const {
  AssocConfig a;
  a.a_t = a_t;
  a.a_birth = a_birth;
  a.a_at = a_at;
  a.a_am = a_am;
  a.forbid_nonnegative = forbid_nonnegative;
  a.coast_decaying = coast_decaying;
  return a;
}

PipelineConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("parse_config: cannot open " + file.string());
  PipelineConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("parse_config: expected key=value at line " +
                               std::to_string(line_no));
    }
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto as_bool = [&](const std::string& v) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw std::runtime_error("parse_config: bad boolean '" + v + "' at line " +
                               std::to_string(line_no));
    };
    try {
      if (key == "sampling_period") cfg.sampling_period = std::stod(val);
      else if (key == "origin_x") cfg.origin_x = std::stod(val);
      else if (key == "origin_y") cfg.origin_y = std::stod(val);
      else if (key == "extent_x") cfg.extent_x = std::stod(val);
      else if (key == "extent_y") cfg.extent_y = std::stod(val);
      else if (key == "border") cfg.border = std::stoi(val);
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "epochs") cfg.epochs = std::stoi(val);
      else if (key == "filters") cfg.filters = std::stoi(val);
      else if (key == "loss") {
        if (val == "kl") cfg.loss = LossKind::kKL;
        else if (val == "jsd") cfg.loss = LossKind::kJSD;
        else throw std::runtime_error("loss must be kl or jsd");
      }
      else if (key == "relu_output") cfg.relu_output = as_bool(val);
      else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
      else if (key == "beta1") cfg.beta1 = std::stod(val);
      else if (key == "beta2") cfg.beta2 = std::stod(val);
      else if (key == "l2_kernel") cfg.l2_kernel = std::stod(val);
      else if (key == "p_d") cfg.p_d = std::stod(val);
      else if (key == "clutter_rate") cfg.clutter_rate = std::stod(val);
      else if (key == "r_diag") cfg.r_diag = std::stod(val);
      else if (key == "w_span") cfg.w_span = std::stod(val);
      else if (key == "h_span") cfg.h_span = std::stod(val);
      else if (key == "omega_t") cfg.omega_t = std::stod(val);
      else if (key == "sigma_birth") cfg.sigma_birth = std::stod(val);
      else if (key == "omega_birth") cfg.omega_birth = std::stod(val);
      else if (key == "birth_box_w") cfg.birth_box_w = std::stod(val);
      else if (key == "birth_box_h") cfg.birth_box_h = std::stod(val);
      else if (key == "truncate_thresh") cfg.truncate_thresh = std::stod(val);
      else if (key == "merge_dist") cfg.merge_dist = std::stod(val);
      else if (key == "min_separation_cells") cfg.min_separation_cells = std::stod(val);
      else if (key == "position_var_floor") cfg.position_var_floor = std::stod(val);
      else if (key == "a_t") cfg.a_t = std::stoi(val);
      else if (key == "a_birth") cfg.a_birth = std::stoi(val);
      else if (key == "a_at") cfg.a_at = std::stoi(val);
      else if (key == "a_am") cfg.a_am = std::stoi(val);
      else if (key == "forbid_nonnegative") cfg.forbid_nonnegative = as_bool(val);
      else if (key == "coast_decaying") cfg.coast_decaying = as_bool(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else throw std::runtime_error("unknown key '" + key + "'");
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("parse_config: line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return cfg;
}

PipelineState init_pipeline(const PipelineConfig& cfg, double seq_extent_x,
                            double seq_extent_y) {
  PipelineState s;
  s.grid = cfg.make_grid(seq_extent_x, seq_extent_y);
  s.prev_phd.grid = s.grid;
  s.prev_phd.values = Grid::Zero(s.grid.rows(), s.grid.cols());
  s.batch.grid = s.grid;
  s.batch.capacity = static_cast<std::size_t>(cfg.batch_size);
  s.params = make_params(cfg.filters, cfg.seed + 1);
  AdamConfig ac;
  ac.lr = cfg.learning_rate;
  ac.beta1 = cfg.beta1;
  ac.beta2 = cfg.beta2;
  s.opt = make_adam(s.params, ac);
  s.rng.seed(cfg.seed);
  return s;
}

namespace {

void floor_covariance(TargetTuple& t, double var_floor) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(t.cov);
  if (es.info() != Eigen::Success) return;
  Vec4 ev = es.eigenvalues();
  bool changed = false;
  for (int i = 0; i < 4; ++i) {
    if (ev[i] < var_floor) {
      ev[i] = var_floor;
      changed = true;
    }
  }
  if (changed) {
    t.cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    t.cov = 0.5 * (t.cov + t.cov.transpose());
  }
}

}  // namespace

TargetSet step(PipelineState& state, const PipelineConfig& cfg,
               const MeasurementSet& z) {
  PipelineState s = state;  // commit only on success
  ++s.frame;
  const char* stage = "setup";
  try {
    const UpdateConfig ucfg = cfg.make_update(s.grid);
    const AssocConfig acfg = cfg.make_assoc();
    const double min_sep = cfg.min_separation_cells * s.grid.ts;
    const double var_floor = cfg.position_var_floor >= 0.0
                                 ? cfg.position_var_floor
                                 : s.grid.ts * s.grid.ts;

    stage = "predict";
    const TargetSet matures_prev = extract_mature(s.targets, cfg.a_t);
    // Peak count and the J_max draw both track the carried mixture mass,
    // not just the mature part: decaying and newborn tuples still claim
    // mixture capacity, otherwise their clusters get pruned away before
    // they can mature.
    const long count = std::lround(gm_integral(s.targets));
    Grid raw = Grid::Zero(s.grid.rows(), s.grid.cols());
    if (s.batch.full()) {
      raw = predict(s.params, s.batch, cfg.relu_output);
      // The training loss is shift- and scale-blind, so the net's output
      // carries no physical units. Center it and match its deviation energy
      // to the most recent observed PDD before the persistence sum.
      const Grid& last = s.batch.maps.back();
      const double sd_last = std::sqrt((last - last.mean()).square().mean());
      const double sd_raw = std::sqrt((raw - raw.mean()).square().mean());
      raw = sd_raw > 1e-15 ? Grid((raw - raw.mean()) * (sd_last / sd_raw))
                           : Grid(Grid::Zero(s.grid.rows(), s.grid.cols()));
    }

    stage = "postprocess";
    const PhdMap v_pred = postprocess_prediction(raw, s.grid, s.prev_phd, cfg.border);

    stage = "peaks";
    const PeakList peaks =
        extract_peaks(v_pred, count > 0 ? static_cast<std::size_t>(count) : 0, min_sep);
    TargetSet predicted = assign_covariances(peaks, matures_prev, ucfg.birth,
                                             cfg.birth_box_w, cfg.birth_box_h);
    predicted.frame = s.frame;

    stage = "births";
    const TargetSet with_births = append_births(predicted, z, ucfg);

    stage = "update";
    const TargetSet updated = kalman_update(with_births, z, ucfg);
    const std::size_t j_max =
        count > 0 ? jmax_draw(static_cast<std::size_t>(count), s.rng)
                  : std::max<std::size_t>(z.boxes.size(), 1);
    const TargetSet reduced =
        prune_merge(updated, cfg.truncate_thresh, cfg.merge_dist, j_max);

    stage = "select";
    const TargetSet selected = select_by_weight(reduced, cfg.omega_t);

    stage = "associate";
    TargetSet carried = t2t_associate(s.targets, selected, acfg, s.label_counter);
    carried.frame = s.frame;

    std::map<std::int64_t, int> streaks;
    TargetSet kept;
    kept.frame = s.frame;
    for (TargetTuple& t : carried.targets) {
      if (t.age < cfg.a_t) {
        const auto it = s.submature_streak.find(t.label);
        const int streak = (it == s.submature_streak.end() ? 0 : it->second) + 1;
        if (streak >= cfg.a_t) continue;  // remove from the carried set
        streaks[t.label] = streak;
      }
      floor_covariance(t, var_floor);
      kept.targets.push_back(t);
    }
    s.submature_streak = std::move(streaks);

    stage = "extract";
    TargetSet reported = extract_mature(kept, cfg.a_t);
    reported.frame = s.frame;

    stage = "render";
    const PhdMap v_k = render_phd(reported, s.grid);
    const PddMap d_k = pdd(v_k, s.prev_phd);

    stage = "train";
    if (s.batch.full()) {
      s.last_train = train_online(s.params, s.opt, s.batch, d_k.values, cfg.epochs,
                                  cfg.loss, cfg.relu_output, cfg.l2_kernel);
    }
    s.batch.push(d_k);

    s.targets = std::move(kept);
    s.prev_phd = v_k;
    state = std::move(s);
    return reported;
  } catch (const std::exception& e) {
    throw std::runtime_error("pipeline frame " + std::to_string(s.frame) + " stage " +
                             stage + ": " + e.what());
  }
}

RunResult run(const PipelineConfig& cfg, const SequenceData& seq,
              const std::optional<Timeline>& gt, const RunOptions& opts) {
  PipelineState state = init_pipeline(cfg, seq.extent_x, seq.extent_y);
  RunResult result;
  result.has_gt = gt.has_value();

  if (opts.dump_dir) std::filesystem::create_directories(*opts.dump_dir);

  double sum_overall = 0.0, sum_loc = 0.0, sum_card = 0.0;
  int frames_scored = 0;

  for (int frame = 1; frame <= seq.last_frame; ++frame) {
    static const MeasurementSet kEmpty;
    const auto it = seq.detections.find(frame);
    MeasurementSet z = it == seq.detections.end() ? kEmpty : it->second;
    z.frame = frame;

    const TargetSet reported = step(state, cfg, z);

    LabelledBoxes boxes;
    for (const TargetTuple& t : reported.targets) {
      boxes.emplace_back(t.label, t.mean);
    }
    result.tracks[frame] = std::move(boxes);

    if (gt) {
      std::vector<Vec2> est, truth;
      for (const TargetTuple& t : reported.targets) est.push_back(t.mean.head<2>());
      const auto g = gt->find(frame);
      if (g != gt->end()) {
        for (const auto& [id, box] : g->second) truth.push_back(box.head<2>());
      }
      const OspaResult o = ospa(est, truth);
      result.ospa_frames.push_back(o);
      sum_overall += o.overall;
      sum_loc += o.loc;
      sum_card += o.card;
      ++frames_scored;
    }

    if (opts.dump_dir) {
      char name[64];
      std::snprintf(name, sizeof(name), "phd_%06d.pgm", frame);
      dump_map_pgm(*opts.dump_dir / name, state.prev_phd.values);
    }
  }

  if (gt) {
    result.mot = clear_mot(result.tracks, *gt);
    if (frames_scored > 0) {
      result.ospa_mean.overall = sum_overall / frames_scored;
      result.ospa_mean.loc = sum_loc / frames_scored;
      result.ospa_mean.card = sum_card / frames_scored;
    }
  }
  return result;
}

std::string report_header() {
  return "name,OSPA,OSPA-Loc,OSPA-Card,Rcll,Prcn,MOTA,MOTAL";
}

std::string report_row(const std::string& name, const RunResult& result) {
  std::ostringstream os;
  os.precision(6);
  os << name << ',' << result.ospa_mean.overall << ',' << result.ospa_mean.loc
     << ',' << result.ospa_mean.card << ',' << result.mot.recall << ','
     << result.mot.precision << ',' << result.mot.mota << ',' << result.mot.motal;
  return os.str();
}

}  // namespace mtft
