#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "linselfcal/averaging.hpp"
#include "linselfcal/epipolar.hpp"
#include "linselfcal/geometry.hpp"
#include "linselfcal/synth.hpp"

namespace linselfcal {

// Shortest text that parses back to the same double.
std::string format_double(double v);
// Whole-field parse; throws ParseError naming `context` on failure or non-finite values.
double parse_double(std::string_view field, const std::string& context);

std::string read_text_file(const std::string& path);  // IoError when unreadable
void write_text_file(const std::string& path, const std::string& content);

// Match file:
//   # comment
//   @image1 <id> <width> <height>
//   @image2 <id> <width> <height>
//   @truth <key> <value>
//   x1,y1,x2,y2[,label]
// Coordinates are top-left pixels; labels are 0 or 1; every row has the same column count.
struct MatchFile {
  CorrespondenceSet corrs;
  std::map<std::string, double> truth;
};
MatchFile parse_match_file(const std::string& text);
std::string format_match_file(const MatchFile& file);
MatchFile read_match_file(const std::string& path);
void write_match_file(const std::string& path, const MatchFile& file);

// Camera file rows: "<id>,P,<12 values row-major>" or "<id>,fRC,<f>,<9 values of R>,<3 values of C>".
struct CameraRecord {
  std::string id;
  Mat34 P = Mat34::Zero();
};
std::vector<CameraRecord> parse_camera_file(const std::string& text);
std::string format_camera_file(const std::vector<CameraRecord>& cameras);

// Rotation graph rows: "i,j,r11,...,r33" (R_j = R_ij R_i; repeated (i, j) rows add estimates).
RotationGraph parse_rotation_graph(const std::string& text);
std::string format_rotation_graph(const RotationGraph& graph);
// Absolute rotations: "node,r11,...,r33".
std::map<int, Mat3> parse_rotations(const std::string& text);
std::string format_rotations(const std::map<int, Mat3>& rotations);

// Focal pool rows: "pair_id,image_i,image_j,f_i,f_j".
FocalEstimatePool parse_focal_pool(const std::string& text);
std::string format_focal_pool(const FocalEstimatePool& pool);
// Focal truth rows: "image,f".
std::map<int, double> parse_focal_truth(const std::string& text);
std::string format_focal_truth(const std::map<int, double>& truth);

// Header: sigma,trial_count,med_dR_deg,med_dt_deg,med_df1,med_df2,frac_dR_lt_5,frac_dR_lt_10
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

}  // namespace linselfcal
