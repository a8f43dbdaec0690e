#include "mtft/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>
#include <vector>

namespace mtft {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_field(const std::string& s, long line_no) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) {
    throw std::runtime_error("mot_io: empty field at line " + std::to_string(line_no));
  }
  double v = 0.0;
  const auto res = std::from_chars(s.data() + a, s.data() + b + 1, v);
  if (res.ec != std::errc() || res.ptr != s.data() + b + 1) {
    throw std::runtime_error("mot_io: bad number '" + s + "' at line " +
                             std::to_string(line_no));
  }
  return v;
}

bool read_seqinfo(const std::filesystem::path& dir, double& w, double& h) {
  std::ifstream in(dir / "seqinfo.ini");
  if (!in) return false;
  std::string line;
  bool got_w = false, got_h = false;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    const std::string val = line.substr(eq + 1);
    if (key == "imWidth") {
      w = std::atof(val.c_str());
      got_w = true;
    } else if (key == "imHeight") {
      h = std::atof(val.c_str());
      got_h = true;
    }
  }
  return got_w && got_h;
}

}  // namespace

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 9.007199254740992e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

SequenceData parse_detections(const std::filesystem::path& det_file,
                              double conf_thresh) {
  std::ifstream in(det_file);
  if (!in) {
    throw std::runtime_error("parse_detections: cannot open " + det_file.string());
  }
  SequenceData seq;
  std::string line;
  long line_no = 0;
  double max_x = 0.0, max_y = 0.0;
  bool any = false;
  int lo = 0, hi = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 7) {
      throw std::runtime_error("parse_detections: expected >= 7 fields at line " +
                               std::to_string(line_no));
    }
    const int frame = static_cast<int>(parse_field(f[0], line_no));
    const double left = parse_field(f[2], line_no);
    const double top = parse_field(f[3], line_no);
    const double w = parse_field(f[4], line_no);
    const double h = parse_field(f[5], line_no);
    const double conf = parse_field(f[6], line_no);
    if (frame < 1) {
      throw std::runtime_error("parse_detections: frame < 1 at line " +
                               std::to_string(line_no));
    }
    if (conf < conf_thresh) continue;
    if (w <= 0.0 || h <= 0.0) {
      ++seq.skipped_rows;
      continue;
    }
    MeasurementSet& ms = seq.detections[frame];
    ms.frame = frame;
    ms.boxes.emplace_back(left + w / 2.0, top + h / 2.0, w, h);
    max_x = std::max(max_x, left + w);
    max_y = std::max(max_y, top + h);
    if (!any) {
      lo = hi = frame;
      any = true;
    } else {
      lo = std::min(lo, frame);
      hi = std::max(hi, frame);
    }
  }
  seq.first_frame = any ? lo : 0;
  seq.last_frame = any ? hi : 0;

  double iw = 0.0, ih = 0.0;
  if (read_seqinfo(det_file.parent_path(), iw, ih) ||
      read_seqinfo(det_file.parent_path().parent_path(), iw, ih)) {
    seq.extent_x = iw;
    seq.extent_y = ih;
  } else {
    seq.extent_x = max_x * 1.1;
    seq.extent_y = max_y * 1.1;
  }
  return seq;
}

Timeline parse_ground_truth(const std::filesystem::path& gt_file) {
  std::ifstream in(gt_file);
  if (!in) {
    throw std::runtime_error("parse_ground_truth: cannot open " + gt_file.string());
  }
  Timeline gt;
  std::set<std::pair<int, long long>> seen;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 6) {
      throw std::runtime_error("parse_ground_truth: expected >= 6 fields at line " +
                               std::to_string(line_no));
    }
    const int frame = static_cast<int>(parse_field(f[0], line_no));
    const long long id = static_cast<long long>(parse_field(f[1], line_no));
    const double left = parse_field(f[2], line_no);
    const double top = parse_field(f[3], line_no);
    const double w = parse_field(f[4], line_no);
    const double h = parse_field(f[5], line_no);
    if (f.size() >= 7 && parse_field(f[6], line_no) == 0.0) continue;  // inactive
    if (!seen.insert({frame, id}).second) {
      throw std::runtime_error("parse_ground_truth: duplicate (frame, id) at line " +
                               std::to_string(line_no));
    }
    gt[frame].emplace_back(id, Vec4(left + w / 2.0, top + h / 2.0, w, h));
  }
  return gt;
}

void write_results(const std::filesystem::path& out_file, const Timeline& tracks) {
  std::ofstream out(out_file);
  if (!out) {
    throw std::runtime_error("write_results: cannot open " + out_file.string());
  }
  for (const auto& [frame, boxes] : tracks) {
    LabelledBoxes sorted = boxes;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [label, box] : sorted) {
      out << frame << ',' << label << ',' << format_number(box[0] - box[2] / 2.0)
          << ',' << format_number(box[1] - box[3] / 2.0) << ','
          << format_number(box[2]) << ',' << format_number(box[3])
          << ",1,-1,-1,-1\n";
    }
  }
}

void dump_map_pgm(const std::filesystem::path& out_file, const Grid& values) {
  std::ofstream out(out_file);
  if (!out) {
    throw std::runtime_error("dump_map_pgm: cannot open " + out_file.string());
  }
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const double span = hi - lo;
  out << "P2\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const int g = span > 0.0
                        ? static_cast<int>(std::lround((values(i, j) - lo) / span * 255.0))
                        : 0;
      out << g << (j + 1 < values.cols() ? ' ' : '\n');
    }
  }
}

void dump_map_csv(const std::filesystem::path& out_file, const Grid& values) {
  std::ofstream out(out_file);
  if (!out) {
    throw std::runtime_error("dump_map_csv: cannot open " + out_file.string());
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << format_number(values(i, j)) << (j + 1 < values.cols() ? "," : "\n");
    }
  }
}

}  // namespace mtft
