#pragma once

#include <cstdint>
#include <filesystem>

#include "mtft/metrics.hpp"
#include "mtft/update.hpp"

namespace mtft {

struct TrackSpec {
  int birth = 1;
  int death = 100;  // inclusive
  double cx = 0.0, cy = 0.0;
  double w = 30.0, h = 40.0;
  double vx = 0.0, vy = 0.0;
  double turn = 0.0;  // heading change per frame, radians
};

struct ScenarioSpec {
  double extent_x = 1000.0;
  double extent_y = 1000.0;
  int frames = 100;
  double p_d = 1.0;
  double clutter_rate = 0.0;
  double noise_sigma = 0.0;  // detection center jitter
  std::uint64_t seed = 1;
  std::vector<TrackSpec> tracks;
};

struct Scenario {
  Timeline gt;
  std::map<int, MeasurementSet> detections;
  ScenarioSpec spec;
};

// Deterministic given the seed. Detections per frame: each live track is
// kept with probability p_d and jittered on its center, then Poisson
// clutter boxes are appended uniformly over the extent.
Scenario gen_scenario(const ScenarioSpec& spec);

// Flat key=value file; `track` lines hold comma-separated
// birth,death,cx,cy,w,h,vx,vy[,turn]. Unknown keys throw.
ScenarioSpec parse_scenario(const std::filesystem::path& file);

// MOT-style layout: <dir>/det/det.txt, <dir>/gt/gt.txt, <dir>/seqinfo.ini.
void write_scenario(const std::filesystem::path& dir, const Scenario& sc);

}  // namespace mtft
