#ifndef HOMSYNTH_METRICS_HPP
#define HOMSYNTH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "homsynth/homography.hpp"
#include "json.hpp"

namespace homsynth {

// Mean over the four corners of the distance between predicted and desired
// corner displacements. Both parameterizations must use the same reference
// corners, so this equals the mean distance between the displaced corners.
inline double mean_pairwise_distance(const FourPointHomography& pred,
                                     const FourPointHomography& gt) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += (pred.deltas[i] - gt.deltas[i]).norm();
  return 0.25 * sum;
}

// Nearest-rank percentiles of a sample: t_p is the ceil(p*n/100)-th smallest
// value, so p percent of the sample lies at or below t_p. No interpolation.
inline std::map<double, double> cdf_thresholds(
    const std::vector<double>& mpds, const std::vector<double>& percentiles) {
  if (mpds.empty()) throw Error(Errc::EmptyInput, "no values to rank");
  for (double p : percentiles) {
    if (!(p > 0.0 && p <= 100.0)) {
      throw Error(Errc::InvalidArgument, "percentile outside (0, 100]");
    }
  }
  std::vector<double> sorted = mpds;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::map<double, double> out;
  for (double p : percentiles) {
    // The epsilon keeps exact products like 30*10/100 from ceiling to 4.
    auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0 - 1e-9));
    rank = std::max<std::size_t>(rank, 1);
    out[p] = sorted[rank - 1];
  }
  return out;
}

// One observation of a manually annotated landmark in one frame.
struct LandmarkTrack {
  int frame_index = 0;
  std::string landmark_id;
  Vec2 position = Vec2::Zero();
};

// Reads `frame,landmark_id,u,v` rows. Landmark ids are opaque strings; the
// same (frame, id) pair may appear only once.
inline std::vector<LandmarkTrack> read_landmark_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::ParseError, "landmark CSV is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,landmark_id,u,v") {
    throw Error(Errc::ParseError, "landmark CSV header mismatch: " + line);
  }
  std::vector<LandmarkTrack> tracks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string frame_s, id, u_s, v_s;
    if (!std::getline(row, frame_s, ',') || !std::getline(row, id, ',') ||
        !std::getline(row, u_s, ',') || !std::getline(row, v_s)) {
      throw Error(Errc::ParseError,
                  "landmark CSV line " + std::to_string(line_no) +
                      ": expected 4 fields");
    }
    LandmarkTrack t;
    try {
      std::size_t used = 0;
      t.frame_index = std::stoi(frame_s, &used);
      if (used != frame_s.size()) throw std::invalid_argument(frame_s);
      t.position.x() = std::stod(u_s, &used);
      if (used != u_s.size()) throw std::invalid_argument(u_s);
      t.position.y() = std::stod(v_s, &used);
      if (used != v_s.size()) throw std::invalid_argument(v_s);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "landmark CSV line " +
                                        std::to_string(line_no) +
                                        ": bad number");
    }
    t.landmark_id = id;
    for (const LandmarkTrack& prev : tracks) {
      if (prev.frame_index == t.frame_index && prev.landmark_id == id) {
        throw Error(Errc::ParseError,
                    "duplicate landmark (" + frame_s + ", " + id + ")");
      }
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

inline std::vector<LandmarkTrack> read_landmark_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return read_landmark_csv(in);
}

// Camera motion between two annotated frames. Landmarks visible in both
// frames give correspondences with the frame_b observation as the displaced
// point; the fitted homography is reparameterized over the given corners.
inline FourPointHomography gt_from_landmarks(
    const std::vector<LandmarkTrack>& tracks, int frame_a, int frame_b,
    const CornerArray& corners) {
  std::map<std::string, Vec2> in_a, in_b;
  for (const LandmarkTrack& t : tracks) {
    if (t.frame_index == frame_a) in_a[t.landmark_id] = t.position;
    if (t.frame_index == frame_b) in_b[t.landmark_id] = t.position;
  }
  CorrespondenceSet corr;
  for (const auto& [id, pos] : in_a) {
    auto it = in_b.find(id);
    if (it != in_b.end()) corr.push_back({pos, it->second});
  }
  if (corr.size() < 4) {
    throw Error(Errc::TooFewPoints,
                "need 4 landmarks common to both frames, found " +
                    std::to_string(corr.size()));
  }
  Homography g = solve_dlt(corr, {true});
  return matrix_to_four_point(g, corners);
}

// Per-run evaluation summary: every pair's MPD plus CDF thresholds.
struct EvalReport {
  std::vector<double> mpds;
  std::map<double, double> thresholds;
  std::size_t count = 0;
};

namespace detail {

// "30" for integral percentiles, shortest decimal otherwise.
inline std::string percentile_key(double p) {
  std::ostringstream os;
  os.precision(15);
  os << p;
  return os.str();
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json thresholds = nlohmann::json::object();
  for (const auto& [p, t] : report.thresholds) {
    thresholds[detail::percentile_key(p)] = t;
  }
  return nlohmann::json{{"count", report.count},
                        {"thresholds", thresholds},
                        {"mpds", report.mpds}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  try {
    report.count = j.at("count").get<std::size_t>();
    report.mpds = j.at("mpds").get<std::vector<double>>();
    for (const auto& [key, value] : j.at("thresholds").items()) {
      std::size_t used = 0;
      double p = std::stod(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
      report.thresholds[p] = value.get<double>();
    }
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, std::string("bad report JSON: ") + e.what());
  }
  return report;
}

// Assembles the report for a prediction/ground-truth pairing.
inline EvalReport make_report(const std::vector<double>& mpds,
                              const std::vector<double>& percentiles) {
  EvalReport report;
  report.mpds = mpds;
  report.count = mpds.size();
  report.thresholds = cdf_thresholds(mpds, percentiles);
  return report;
}

}  // namespace homsynth

#endif  // HOMSYNTH_METRICS_HPP
