#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "mtft/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mtft;

namespace {

int cmd_run(const std::string& config_file, const std::string& seq_dir,
            const std::string& out_dir, const std::string& loss_override,
            long long seed_override, double conf_thresh, bool dump_maps,
            std::string name) {
  PipelineConfig cfg;
  if (!config_file.empty()) cfg = parse_config(config_file);
  if (loss_override == "kl") cfg.loss = LossKind::kKL;
  else if (loss_override == "jsd") cfg.loss = LossKind::kJSD;
  else if (!loss_override.empty()) {
    std::cerr << "unknown loss '" << loss_override << "'\n";
    return 2;
  }
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  const fs::path seq(seq_dir);
  if (name.empty()) name = seq.filename().string();
  const SequenceData data = parse_detections(seq / "det" / "det.txt", conf_thresh);
  std::optional<Timeline> gt;
  if (fs::exists(seq / "gt" / "gt.txt")) {
    gt = parse_ground_truth(seq / "gt" / "gt.txt");
  }

  fs::create_directories(out_dir);
  RunOptions opts;
  if (dump_maps) opts.dump_dir = fs::path(out_dir) / "maps";

  const RunResult result = run(cfg, data, gt, opts);
  write_results(fs::path(out_dir) / (name + ".txt"), result.tracks);

  if (gt) {
    std::ofstream rep(fs::path(out_dir) / (name + "_metrics.csv"));
    rep << report_header() << "\n" << report_row(name, result) << "\n";
    std::cout << report_header() << "\n" << report_row(name, result) << "\n";
  } else {
    std::cout << "tracks written (no ground truth found, metrics skipped)\n";
  }
  if (data.skipped_rows > 0) {
    std::cerr << "warning: skipped " << data.skipped_rows
              << " detection rows with non-positive size\n";
  }
  return 0;
}

int cmd_simulate(const std::string& spec_file, const std::string& out_dir) {
  const ScenarioSpec spec = parse_scenario(spec_file);
  const Scenario sc = gen_scenario(spec);
  write_scenario(out_dir, sc);
  long dets = 0;
  for (const auto& [f, ms] : sc.detections) dets += static_cast<long>(ms.boxes.size());
  std::cout << "wrote " << spec.frames << " frames, " << dets << " detections to "
            << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& tracks_file, const std::string& gt_file, double c) {
  const Timeline tracks = parse_ground_truth(tracks_file);  // same row layout
  const Timeline gt = parse_ground_truth(gt_file);
  const MotScores mot = clear_mot(tracks, gt);

  OspaConfig ocfg;
  ocfg.c = c;
  double sum = 0.0, sum_loc = 0.0, sum_card = 0.0;
  int n = 0;
  std::set<int> frames;
  for (const auto& [f, _] : tracks) frames.insert(f);
  for (const auto& [f, _] : gt) frames.insert(f);
  for (int f : frames) {
    std::vector<Vec2> a, b;
    if (auto it = tracks.find(f); it != tracks.end()) {
      for (const auto& [id, box] : it->second) a.push_back(box.head<2>());
    }
    if (auto it = gt.find(f); it != gt.end()) {
      for (const auto& [id, box] : it->second) b.push_back(box.head<2>());
    }
    const OspaResult o = ospa(a, b, ocfg);
    sum += o.overall;
    sum_loc += o.loc;
    sum_card += o.card;
    ++n;
  }

  std::cout << report_header() << "\n";
  std::cout << "eval," << (n ? sum / n : 0.0) << ',' << (n ? sum_loc / n : 0.0)
            << ',' << (n ? sum_card / n : 0.0) << ',' << mot.recall << ','
            << mot.precision << ',' << mot.mota << ',' << mot.motal << "\n";
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&failures](bool ok, const char* what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  {
    std::mt19937_64 rng(7);
    bool all = true;
    for (int trial = 0; trial < 20 && all; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 4);
      const int m = 2 + static_cast<int>(rng() % 4);
      Eigen::MatrixXd cost(n, m);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          cost(i, j) = static_cast<double>(rng() % 2000) / 10.0 - 100.0;
        }
      }
      const double got = hungarian(cost, false).total_cost;
      // brute force over injections of the smaller side
      const bool rows_small = n <= m;
      const int small = rows_small ? n : m, large = rows_small ? m : n;
      std::vector<int> perm(large);
      for (int i = 0; i < large; ++i) perm[i] = i;
      double best = 1e18;
      std::sort(perm.begin(), perm.end());
      do {
        double tot = 0.0;
        for (int i = 0; i < small; ++i) {
          tot += rows_small ? cost(i, perm[i]) : cost(perm[i], i);
        }
        best = std::min(best, tot);
      } while (std::next_permutation(perm.begin(), perm.end()));
      all = std::abs(got - best) < 1e-9;
    }
    check(all, "hungarian matches exhaustive enumeration");
  }
  {
    const OspaResult r = ospa({{0.0, 0.0}}, {});
    check(std::abs(r.overall - 100.0) < 1e-12 && std::abs(r.card - 100.0) < 1e-12,
          "ospa cardinality-only case");
  }
  {
    TargetSet set;
    TargetTuple t;
    t.mean << 10, 10, 5, 5;
    t.weight = 0.6;
    set.targets.push_back(t);
    t.mean << 10.5, 10, 5, 5;
    t.weight = 0.4;
    set.targets.push_back(t);
    const TargetSet merged = prune_merge(set, 0.0, 10.0, 5);
    check(merged.size() == 1 && std::abs(gm_integral(merged) - 1.0) < 1e-12,
          "prune_merge conserves weight");
  }
  {
    PddBatch batch;
    GridSpec g;
    g.extent_x = g.extent_y = 80.0;
    g.ts = 10.0;
    batch.grid = g;
    batch.capacity = 2;
    PddMap m;
    m.grid = g;
    std::mt19937_64 rng(3);
    for (int k = 0; k < 2; ++k) {
      m.values = Grid::Zero(8, 8);
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
          m.values(i, j) = static_cast<double>(rng() % 1000) / 1000.0 - 0.4;
        }
      }
      batch.push(m);
    }
    Grid target = Grid::Zero(8, 8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        target(i, j) = static_cast<double>(rng() % 1000) / 1000.0 - 0.4;
      }
    }
    ConvLstmParams p = make_params(1, 11);
    auto [g1, loss] = grad(p, batch, target, LossKind::kKL, false, 0.0);
    Eigen::VectorXd flat = p.flatten();
    const Eigen::VectorXd ga = g1.flatten();
    bool ok = true;
    std::mt19937_64 pick(5);
    for (int probe = 0; probe < 10 && ok; ++probe) {
      const Eigen::Index idx =
          static_cast<Eigen::Index>(pick() % static_cast<std::uint64_t>(flat.size()));
      const double h = 1e-4;
      ConvLstmParams pp = p;
      Eigen::VectorXd f2 = flat;
      f2[idx] += h;
      pp.unflatten(f2);
      PddBatch b2 = batch;
      const double lp = kl_loss(predict(pp, b2, false), target);
      f2[idx] -= 2.0 * h;
      pp.unflatten(f2);
      const double lm = kl_loss(predict(pp, b2, false), target);
      const double fd = (lp - lm) / (2.0 * h);
      ok = std::abs(fd - ga[idx]) <= 1e-3 * std::max({std::abs(fd), std::abs(ga[idx]), 1e-4});
    }
    check(ok, "convlstm analytic gradient matches finite differences");
  }
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-target filtering and tracking"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "track a detection sequence");
  std::string config_file, seq_dir, out_dir, loss_override, name;
  long long seed_override = -1;
  double conf_thresh = 0.0;
  bool dump_maps = false;
  run_cmd->add_option("--config", config_file, "pipeline config file");
  run_cmd->add_option("--seq", seq_dir, "sequence directory")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--loss", loss_override, "kl or jsd");
  run_cmd->add_option("--seed", seed_override, "override config seed");
  run_cmd->add_option("--conf", conf_thresh, "detection confidence threshold");
  run_cmd->add_option("--name", name, "sequence name for outputs");
  run_cmd->add_flag("--dump-maps", dump_maps, "write per-frame PHD maps");

  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic sequence");
  std::string spec_file, sim_out;
  sim_cmd->add_option("--spec", spec_file, "scenario spec file")->required();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "score a result file against ground truth");
  std::string tracks_file, gt_file;
  double ospa_c = 100.0;
  eval_cmd->add_option("--tracks", tracks_file, "result file")->required();
  eval_cmd->add_option("--gt", gt_file, "ground truth file")->required();
  eval_cmd->add_option("--ospa-c", ospa_c, "OSPA cutoff");

  auto* self_cmd = app.add_subcommand("selftest", "run built-in sanity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(config_file, seq_dir, out_dir, loss_override, seed_override,
                     conf_thresh, dump_maps, name);
    }
    if (sim_cmd->parsed()) return cmd_simulate(spec_file, sim_out);
    if (eval_cmd->parsed()) return cmd_eval(tracks_file, gt_file, ospa_c);
    if (self_cmd->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
