#include "linselfcal/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Calls fn(line_number, trimmed line) for each non-blank, non-comment line.
template <typename Fn>
void for_each_line(const std::string& text, Fn fn) {
  std::size_t start = 0;
  int number = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view line = trim(std::string_view(text).substr(start, end == std::string::npos ? std::string::npos : end - start));
    ++number;
    if (!line.empty() && line.front() != '#') fn(number, line);
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

std::string where(int line) { return "line " + std::to_string(line); }

int parse_int(std::string_view field, const std::string& context) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(context + ": expected an integer, got '" + std::string(field) + "'");
  }
  return v;
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t n, int line) {
  if (f.size() != n) {
    throw ParseError(where(line) + ": expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
  }
}

Mat3 parse_mat3(const std::vector<std::string_view>& f, std::size_t offset, int line) {
  Mat3 R;
  for (int k = 0; k < 9; ++k) R(k / 3, k % 3) = parse_double(f[offset + static_cast<std::size_t>(k)], where(line));
  return R;
}

void append_mat3(std::string& out, const Mat3& R) {
  for (int k = 0; k < 9; ++k) {
    out += ',';
    out += format_double(R(k / 3, k % 3));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view field, const std::string& context) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(context + ": expected a number, got '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(context + ": non-finite value");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("error writing " + path);
}

MatchFile parse_match_file(const std::string& text) {
  MatchFile mf;
  CorrespondenceSet& cs = mf.corrs;
  std::size_t columns = 0;
  for_each_line(text, [&](int line, std::string_view s) {
    if (s.front() == '@') {
      const auto f = split_ws(s);
      if (f[0] == "@image1" || f[0] == "@image2") {
        expect_fields(f, 4, line);
        ImageInfo info{std::string(f[1]), parse_double(f[2], where(line)), parse_double(f[3], where(line))};
        if (!(info.width > 0 && info.height > 0)) throw ParseError(where(line) + ": image size must be positive");
        (f[0] == "@image1" ? cs.image1 : cs.image2) = info;
      } else if (f[0] == "@truth") {
        expect_fields(f, 3, line);
        mf.truth[std::string(f[1])] = parse_double(f[2], where(line));
      } else {
        throw ParseError(where(line) + ": unknown directive '" + std::string(f[0]) + "'");
      }
      return;
    }
    const auto f = split(s, ',');
    if (f.size() != 4 && f.size() != 5) throw ParseError(where(line) + ": expected 4 or 5 columns");
    if (columns == 0) {
      columns = f.size();
      if (columns == 5) cs.labels.emplace();
    } else if (f.size() != columns) {
      throw ParseError(where(line) + ": column count differs from earlier rows");
    }
    const Vec2 a(parse_double(f[0], where(line)), parse_double(f[1], where(line)));
    const Vec2 b(parse_double(f[2], where(line)), parse_double(f[3], where(line)));
    cs.add(a, b);
    if (columns == 5) {
      if (f[4] != "0" && f[4] != "1") throw ParseError(where(line) + ": label must be 0 or 1");
      cs.labels->push_back(f[4] == "1");
    }
  });
  return mf;
}

std::string format_match_file(const MatchFile& file) {
  const CorrespondenceSet& cs = file.corrs;
  cs.validate();
  std::string out;
  const auto image_line = [&](const char* tag, const ImageInfo& info) {
    if (info.width > 0 && info.height > 0) {
      const std::string id = info.id.empty() ? std::string(tag + 1) : info.id;
      if (id.find_first_of(" \t\n") != std::string::npos) throw PreconditionError("image id must not contain spaces");
      out += std::string(tag) + " " + id + " " + format_double(info.width) + " " + format_double(info.height) + "\n";
    }
  };
  image_line("@image1", cs.image1);
  image_line("@image2", cs.image2);
  for (const auto& [key, value] : file.truth) out += "@truth " + key + " " + format_double(value) + "\n";
  out += cs.labels ? "# x1,y1,x2,y2,label\n" : "# x1,y1,x2,y2\n";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    out += format_double(cs.x1[i].x()) + "," + format_double(cs.x1[i].y()) + "," + format_double(cs.x2[i].x()) + "," +
           format_double(cs.x2[i].y());
    if (cs.labels) out += (*cs.labels)[i] ? ",1" : ",0";
    out += "\n";
  }
  return out;
}

MatchFile read_match_file(const std::string& path) { return parse_match_file(read_text_file(path)); }

void write_match_file(const std::string& path, const MatchFile& file) { write_text_file(path, format_match_file(file)); }

std::vector<CameraRecord> parse_camera_file(const std::string& text) {
  std::vector<CameraRecord> cams;
  for_each_line(text, [&](int line, std::string_view s) {
    const auto f = split(s, ',');
    if (f.size() < 2) throw ParseError(where(line) + ": expected a camera row");
    CameraRecord rec;
    rec.id = std::string(f[0]);
    if (f[1] == "P") {
      expect_fields(f, 14, line);
      for (int k = 0; k < 12; ++k) rec.P(k / 4, k % 4) = parse_double(f[2 + static_cast<std::size_t>(k)], where(line));
    } else if (f[1] == "fRC") {
      expect_fields(f, 15, line);
      const double fl = parse_double(f[2], where(line));
      if (!(fl > 0)) throw ParseError(where(line) + ": focal length must be positive");
      const Mat3 R = parse_mat3(f, 3, line);
      const Vec3 C(parse_double(f[12], where(line)), parse_double(f[13], where(line)), parse_double(f[14], where(line)));
      rec.P = compose_camera(calibration_matrix(fl), R, C);
    } else {
      throw ParseError(where(line) + ": camera kind must be P or fRC");
    }
    if (rec.P.leftCols<3>().determinant() == 0.0) throw ParseError(where(line) + ": camera matrix is singular");
    cams.push_back(rec);
  });
  return cams;
}

std::string format_camera_file(const std::vector<CameraRecord>& cameras) {
  std::string out = "# id,P,p11,p12,p13,p14,p21,...,p34\n";
  for (const auto& c : cameras) {
    out += c.id + ",P";
    for (int k = 0; k < 12; ++k) out += "," + format_double(c.P(k / 4, k % 4));
    out += "\n";
  }
  return out;
}

RotationGraph parse_rotation_graph(const std::string& text) {
  RotationGraph g;
  for_each_line(text, [&](int line, std::string_view s) {
    const auto f = split(s, ',');
    expect_fields(f, 11, line);
    const int i = parse_int(f[0], where(line)), j = parse_int(f[1], where(line));
    const Mat3 R = parse_mat3(f, 2, line);
    if (!is_rotation(R, 1e-9)) throw ParseError(where(line) + ": not a rotation matrix");
    g.add(i, j, R);
  });
  return g;
}

std::string format_rotation_graph(const RotationGraph& graph) {
  std::string out = "# i,j,r11,r12,r13,r21,r22,r23,r31,r32,r33\n";
  for (const auto& e : graph.edges) {
    for (const Mat3& R : e.estimates) {
      out += std::to_string(e.i) + "," + std::to_string(e.j);
      append_mat3(out, R);
      out += "\n";
    }
  }
  return out;
}

std::map<int, Mat3> parse_rotations(const std::string& text) {
  std::map<int, Mat3> rots;
  for_each_line(text, [&](int line, std::string_view s) {
    const auto f = split(s, ',');
    expect_fields(f, 10, line);
    const int id = parse_int(f[0], where(line));
    const Mat3 R = parse_mat3(f, 1, line);
    if (!is_rotation(R, 1e-9)) throw ParseError(where(line) + ": not a rotation matrix");
    if (!rots.emplace(id, R).second) throw ParseError(where(line) + ": duplicate node " + std::to_string(id));
  });
  return rots;
}

std::string format_rotations(const std::map<int, Mat3>& rotations) {
  std::string out = "# node,r11,r12,r13,r21,r22,r23,r31,r32,r33\n";
  for (const auto& [id, R] : rotations) {
    out += std::to_string(id);
    append_mat3(out, R);
    out += "\n";
  }
  return out;
}

FocalEstimatePool parse_focal_pool(const std::string& text) {
  FocalEstimatePool pool;
  for_each_line(text, [&](int line, std::string_view s) {
    const auto f = split(s, ',');
    expect_fields(f, 5, line);
    const int sample = parse_int(f[0], where(line));
    const int i = parse_int(f[1], where(line)), j = parse_int(f[2], where(line));
    const double fi = parse_double(f[3], where(line)), fj = parse_double(f[4], where(line));
    if (i == j) throw ParseError(where(line) + ": a pair needs two different images");
    if (!(fi > 0 && fj > 0)) throw ParseError(where(line) + ": focal lengths must be positive");
    pool.add_pair_estimate(sample, i, fi, j, fj);
  });
  return pool;
}

std::string format_focal_pool(const FocalEstimatePool& pool) {
  std::vector<std::tuple<int, int, int, double, double>> rows;
  for (int img : pool.images()) {
    for (const auto& e : pool.estimates(img)) {
      if (img < e.partner) rows.emplace_back(e.sample, img, e.partner, e.f, e.partner_f);
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
  std::string out = "# pair_id,image_i,image_j,f_i,f_j\n";
  for (const auto& [s, i, j, fi, fj] : rows) {
    out += std::to_string(s) + "," + std::to_string(i) + "," + std::to_string(j) + "," + format_double(fi) + "," +
           format_double(fj) + "\n";
  }
  return out;
}

std::map<int, double> parse_focal_truth(const std::string& text) {
  std::map<int, double> truth;
  for_each_line(text, [&](int line, std::string_view s) {
    const auto f = split(s, ',');
    expect_fields(f, 2, line);
    const int id = parse_int(f[0], where(line));
    const double v = parse_double(f[1], where(line));
    if (!(v > 0)) throw ParseError(where(line) + ": focal length must be positive");
    if (!truth.emplace(id, v).second) throw ParseError(where(line) + ": duplicate image " + std::to_string(id));
  });
  return truth;
}

std::string format_focal_truth(const std::map<int, double>& truth) {
  std::string out = "# image,f\n";
  for (const auto& [id, f] : truth) out += std::to_string(id) + "," + format_double(f) + "\n";
  return out;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::string out = "sigma,trial_count,med_dR_deg,med_dt_deg,med_df1,med_df2,frac_dR_lt_5,frac_dR_lt_10\n";
  for (const auto& r : rows) {
    out += format_double(r.sigma) + "," + std::to_string(r.trial_count) + "," + format_double(r.med_dR_deg) + "," +
           format_double(r.med_dt_deg) + "," + format_double(r.med_df1) + "," + format_double(r.med_df2) + "," +
           format_double(r.frac_dR_lt_5) + "," + format_double(r.frac_dR_lt_10) + "\n";
  }
  return out;
}

}  // namespace linselfcal
