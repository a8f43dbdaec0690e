#pragma once

#include "mtft/types.hpp"

namespace mtft {

// Uniform sampling lattice over the image plane. Cell (i, j) covers
// [origin_x + j*ts, origin_x + (j+1)*ts) x [origin_y + i*ts, ...).
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double extent_x = 0.0;
  double extent_y = 0.0;
  double ts = 10.0;  // sampling period (pixels per cell)

  int rows() const;
  int cols() const;
  double cell_x(int j) const { return origin_x + (j + 0.5) * ts; }
  double cell_y(int i) const { return origin_y + (i + 0.5) * ts; }
  bool operator==(const GridSpec&) const = default;

  void validate() const;  // throws unless at least 4x4 cells and ts > 0
};

struct PhdMap {
  GridSpec grid;
  Grid values;  // rows() x cols(), density at cell centers

  double integral() const { return values.sum() * grid.ts * grid.ts; }
};

using PddMap = PhdMap;  // signed difference of two PHD maps

struct Peak {
  Vec2 pos = Vec2::Zero();   // refined position, pixels
  double value = 0.0;        // map value at the peak cell
  double mass = 0.0;         // windowed cell-sum * ts^2 (weight fallback)
};

struct PeakList {
  std::vector<Peak> peaks;
  bool underfull = false;  // fewer maxima found than requested
};

// Density of the positional marginal of each component sampled at cell
// centers, evaluated within a 5-sigma window per component.
PhdMap render_phd(const TargetSet& set, const GridSpec& grid);

// D = current - previous. Grids must match exactly.
PddMap pdd(const PhdMap& current, const PhdMap& previous);

// v_init = raw + prev; border of width B replaced by the interior median;
// negatives clamped; rescaled so the map integrates to prev's mass.
// Throws "degenerate prediction" when that mass is positive but the clamped
// map is identically zero.
PhdMap postprocess_prediction(const Grid& raw, const GridSpec& grid,
                              const PhdMap& prev_phd, int border);

// Up to `count` local maxima (8-neighbour), greedily thinned so accepted
// peaks are at least min_separation apart, each refined by a 3x3 centroid.
PeakList extract_peaks(const PhdMap& map, std::size_t count,
                       double min_separation);

// Match peaks to prev targets by Euclidean distance on positions; matched
// peaks inherit covariance, box size, label, age and motion, orphan peaks
// get birth defaults (label -1). Weights use the Gaussian amplitude relation
// w = value * 2*pi * sqrt(det(Sigma_pos)).
TargetSet assign_covariances(const PeakList& peaks, const TargetSet& prev,
                             const BirthModel& birth, double birth_box_w,
                             double birth_box_h);

}  // namespace mtft
