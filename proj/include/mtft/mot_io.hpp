#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mtft/metrics.hpp"
#include "mtft/update.hpp"

namespace mtft {

struct SequenceData {
  std::map<int, MeasurementSet> detections;  // frame -> boxes (cx, cy, w, h)
  int first_frame = 0;
  int last_frame = 0;
  double extent_x = 0.0;  // image extent; inferred when no seq-info file
  double extent_y = 0.0;
  long skipped_rows = 0;  // non-positive-size detections dropped
};

// det.txt rows: frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z.
// Rows below conf_thresh are skipped; malformed rows throw with the line
// number. Extent comes from a sibling seqinfo.ini (imWidth/imHeight) when
// present, otherwise from the detection bounding box plus 10% padding.
SequenceData parse_detections(const std::filesystem::path& det_file,
                              double conf_thresh = 0.0);

// gt.txt; rows whose active flag (column 7) is zero are dropped.
// Duplicate (frame, id) pairs throw.
Timeline parse_ground_truth(const std::filesystem::path& gt_file);

// MOT result rows frame,id,bb_left,bb_top,w,h,1,-1,-1,-1 ordered by
// (frame, label); numbers are written in shortest round-trip form.
void write_results(const std::filesystem::path& out_file, const Timeline& tracks);

void dump_map_pgm(const std::filesystem::path& out_file, const Grid& values);
void dump_map_csv(const std::filesystem::path& out_file, const Grid& values);

// Shortest decimal form that parses back to the same double ("10", not
// "10.000000"); used by every writer in this module.
std::string format_number(double v);

}  // namespace mtft
