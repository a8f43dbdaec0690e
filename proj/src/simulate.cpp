#include "mtft/simulate.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mtft/mot_io.hpp"

namespace mtft {

namespace {

Vec4 track_box(const TrackSpec& t, int frame) {
  double cx = t.cx, cy = t.cy;
  if (t.turn == 0.0) {
    cx += t.vx * (frame - t.birth);
    cy += t.vy * (frame - t.birth);
  } else {
    double vx = t.vx, vy = t.vy;
    for (int k = t.birth; k < frame; ++k) {
      cx += vx;
      cy += vy;
      const double c = std::cos(t.turn), s = std::sin(t.turn);
      const double nvx = c * vx - s * vy;
      vy = s * vx + c * vy;
      vx = nvx;
    }
  }
  return {cx, cy, t.w, t.h};
}

}  // namespace

Scenario gen_scenario(const ScenarioSpec& spec) {
  Scenario sc;
  sc.spec = spec;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<int> clutter(spec.clutter_rate > 0.0 ? spec.clutter_rate : 1.0);

  for (int frame = 1; frame <= spec.frames; ++frame) {
    MeasurementSet& ms = sc.detections[frame];
    ms.frame = frame;
    std::int64_t id = 0;
    for (const TrackSpec& t : spec.tracks) {
      ++id;
      if (frame < t.birth || frame > t.death) continue;
      const Vec4 box = track_box(t, frame);
      sc.gt[frame].emplace_back(id, box);
      if (uni(rng) < spec.p_d) {
        Vec4 det = box;
        if (spec.noise_sigma > 0.0) {
          det[0] += spec.noise_sigma * gauss(rng);
          det[1] += spec.noise_sigma * gauss(rng);
        }
        ms.boxes.push_back(det);
      }
    }
    if (spec.clutter_rate > 0.0) {
      const int n = clutter(rng);
      for (int k = 0; k < n; ++k) {
        const double w = 20.0 + 40.0 * uni(rng);
        const double h = 20.0 + 40.0 * uni(rng);
        const double cx = uni(rng) * spec.extent_x;
        const double cy = uni(rng) * spec.extent_y;
        ms.boxes.emplace_back(cx, cy, w, h);
      }
    }
  }
  return sc;
}

ScenarioSpec parse_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("parse_scenario: cannot open " + file.string());
  }
  ScenarioSpec spec;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw std::runtime_error("parse_scenario: expected key=value at line " +
                                 std::to_string(line_no));
      }
      continue;
    }
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "extent_x") spec.extent_x = std::stod(val);
      else if (key == "extent_y") spec.extent_y = std::stod(val);
      else if (key == "frames") spec.frames = std::stoi(val);
      else if (key == "p_d") spec.p_d = std::stod(val);
      else if (key == "clutter_rate") spec.clutter_rate = std::stod(val);
      else if (key == "noise_sigma") spec.noise_sigma = std::stod(val);
      else if (key == "seed") spec.seed = std::stoull(val);
      else if (key == "track") {
        std::stringstream ss(val);
        std::vector<double> v;
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
        if (v.size() < 8 || v.size() > 9) {
          throw std::runtime_error("track needs 8 or 9 comma-separated values");
        }
        TrackSpec t;
        t.birth = static_cast<int>(v[0]);
        t.death = static_cast<int>(v[1]);
        t.cx = v[2];
        t.cy = v[3];
        t.w = v[4];
        t.h = v[5];
        t.vx = v[6];
        t.vy = v[7];
        t.turn = v.size() == 9 ? v[8] : 0.0;
        spec.tracks.push_back(t);
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("parse_scenario: line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return spec;
}

void write_scenario(const std::filesystem::path& dir, const Scenario& sc) {
  std::filesystem::create_directories(dir / "det");
  std::filesystem::create_directories(dir / "gt");

  std::ofstream det(dir / "det" / "det.txt");
  if (!det) throw std::runtime_error("write_scenario: cannot write det.txt");
  for (const auto& [frame, ms] : sc.detections) {
    for (const Vec4& b : ms.boxes) {
      det << frame << ",-1," << format_number(b[0] - b[2] / 2.0) << ','
          << format_number(b[1] - b[3] / 2.0) << ',' << format_number(b[2])
          << ',' << format_number(b[3]) << ",1,-1,-1,-1\n";
    }
  }

  std::ofstream gt(dir / "gt" / "gt.txt");
  if (!gt) throw std::runtime_error("write_scenario: cannot write gt.txt");
  for (const auto& [frame, boxes] : sc.gt) {
    for (const auto& [id, b] : boxes) {
      gt << frame << ',' << id << ',' << format_number(b[0] - b[2] / 2.0) << ','
         << format_number(b[1] - b[3] / 2.0) << ',' << format_number(b[2]) << ','
         << format_number(b[3]) << ",1,1,1\n";
    }
  }

  std::ofstream info(dir / "seqinfo.ini");
  info << "[Sequence]\nimWidth=" << format_number(sc.spec.extent_x)
       << "\nimHeight=" << format_number(sc.spec.extent_y)
       << "\nseqLength=" << sc.spec.frames << "\n";
}

}  // namespace mtft
