#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "mtft/types.hpp"

namespace mtft {

struct OspaConfig {
  double c = 100.0;  // cutoff, pixels
  double p = 1.0;    // order
};

struct OspaResult {
  double overall = 0.0;
  double loc = 0.0;
  double card = 0.0;
};

// Schuhmacher OSPA between two point sets (box centers upstream).
OspaResult ospa(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                const OspaConfig& cfg = {});

using LabelledBoxes = std::vector<std::pair<std::int64_t, Vec4>>;
using Timeline = std::map<int, LabelledBoxes>;

struct MotScores {
  double mota = 0.0;
  double motal = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  long tp = 0, fp = 0, fn = 0, id_switches = 0, gt_total = 0;
};

// CLEAR-MOT with match persistence: a ground-truth row keeps its previous
// track while the overlap stays above iou_thresh; remaining pairs are
// assigned by Hungarian on -IoU. A switch is counted whenever a ground
// truth's matched label differs from its last known one. Duplicate labels
// within a frame throw.
MotScores clear_mot(const Timeline& tracks, const Timeline& gt,
                    double iou_thresh = 0.5);

}  // namespace mtft
