#pragma once

// File formats: CSV matrices with a channel-name header, the trial manifest,
// frame directories (PPM) and frame blobs. Every writer goes through a temp
// file and a rename so readers never see a truncated file.

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "skillfuse/common.hpp"
#include "skillfuse/contrastive.hpp"
#include "skillfuse/features.hpp"
#include "skillfuse/signal.hpp"

namespace skillfuse {

namespace fs = std::filesystem;

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw io_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("cannot move " + tmp.string() + " into place");
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw io_error("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

struct NamedMatrix {
  std::vector<std::string> names;
  Matrix data;
};

inline std::string matrix_to_csv(std::span<const std::string> names, const Matrix& m) {
  if (names.size() != m.cols()) throw std::invalid_argument("matrix_to_csv: header size differs from column count");
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].find_first_of(",\n\r") != std::string::npos)
      throw std::invalid_argument("matrix_to_csv: column name contains a separator");
    out += (c ? "," : "") + names[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out += (c ? "," : "") + format_double(m(r, c));
    out += '\n';
  }
  return out;
}

inline NamedMatrix matrix_from_csv(const std::string& text, const std::string& origin = "csv") {
  const auto lines = split_lines(text);
  if (lines.empty()) throw io_error(origin + ": empty file");
  NamedMatrix nm;
  nm.names = split_csv_line(lines.front());
  nm.data = Matrix(lines.size() - 1, nm.names.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != nm.names.size())
      throw io_error(origin + ": row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) + " fields");
    for (std::size_t c = 0; c < cells.size(); ++c) nm.data(r - 1, c) = parse_double(cells[c]);
  }
  return nm;
}

inline void write_matrix_csv(const fs::path& path, std::span<const std::string> names, const Matrix& m) {
  write_file_atomic(path, matrix_to_csv(names, m));
}

inline NamedMatrix read_matrix_csv(const fs::path& path) { return matrix_from_csv(read_file(path), path.string()); }

// manifest

inline constexpr std::string_view kManifestHeader =
    "trial_id,subject_id,task,label,score,neural_path,motor_path,neural_fs_hz,motor_fps";

struct ManifestRow {
  std::string trial_id;
  std::string subject_id;
  Task task = Task::pattern_cutting;
  int label = 0;
  double score = 0.0;
  std::string neural_path;  // relative to the manifest's directory
  std::string motor_path;
  double neural_fs_hz = 1.0;
  double motor_fps = 1.0;
};

inline std::string manifest_to_csv(std::span<const ManifestRow> rows) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.trial_id + ',' + r.subject_id + ',' + std::string(to_string(r.task)) + ',' + std::to_string(r.label) + ',' +
           format_double(r.score) + ',' + r.neural_path + ',' + r.motor_path + ',' + format_double(r.neural_fs_hz) + ',' +
           format_double(r.motor_fps) + '\n';
  }
  return out;
}

inline std::vector<ManifestRow> manifest_from_csv(const std::string& text, const std::string& origin = "manifest") {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kManifestHeader)
    throw io_error(origin + ": header must be exactly '" + std::string(kManifestHeader) + "'");
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 9) throw io_error(origin + ": row " + std::to_string(i + 1) + " needs 9 fields");
    ManifestRow r;
    r.trial_id = f[0];
    r.subject_id = f[1];
    try {
      r.task = parse_task(f[2]);
    } catch (const std::invalid_argument& e) {
      throw io_error(origin + ": " + e.what());
    }
    const double label = parse_double(f[3]);
    if (label != 0.0 && label != 1.0) throw io_error(origin + ": label must be 0 or 1");
    r.label = static_cast<int>(label);
    r.score = parse_double(f[4]);
    r.neural_path = f[5];
    r.motor_path = f[6];
    r.neural_fs_hz = parse_double(f[7]);
    r.motor_fps = parse_double(f[8]);
    if (r.trial_id.empty() || r.subject_id.empty()) throw io_error(origin + ": empty trial or subject id");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_manifest(const fs::path& path, std::span<const ManifestRow> rows) {
  write_file_atomic(path, manifest_to_csv(rows));
}

inline std::vector<ManifestRow> read_manifest(const fs::path& path) {
  return manifest_from_csv(read_file(path), path.string());
}

// raw intensities

// Columns are "<channel>_<wavelength nm>", wavelengths of a channel adjacent.
inline std::string intensities_to_csv(std::span<const IntensitySeries> channels) {
  if (channels.empty()) throw std::invalid_argument("intensities_to_csv: no channels");
  const std::size_t T = channels.front().samples.rows();
  std::vector<std::string> names;
  std::size_t cols = 0;
  for (const auto& ch : channels) {
    if (ch.samples.rows() != T || ch.samples.cols() != ch.wavelengths_nm.size())
      throw std::invalid_argument("intensities_to_csv: inconsistent channel shapes");
    for (double wl : ch.wavelengths_nm) names.push_back(ch.channel_id + "_" + format_double(wl));
    cols += ch.samples.cols();
  }
  Matrix m(T, cols);
  std::size_t c0 = 0;
  for (const auto& ch : channels) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t w = 0; w < ch.samples.cols(); ++w) m(t, c0 + w) = ch.samples(t, w);
    c0 += ch.samples.cols();
  }
  return matrix_to_csv(names, m);
}

inline std::vector<IntensitySeries> intensities_from_csv(const NamedMatrix& nm, double fs_hz) {
  std::vector<IntensitySeries> out;
  for (std::size_t c = 0; c < nm.names.size(); ++c) {
    const auto& name = nm.names[c];
    const auto us = name.rfind('_');
    if (us == std::string::npos || us == 0) throw io_error("intensity column '" + name + "' is not <channel>_<nm>");
    const std::string id = name.substr(0, us);
    const double wl = parse_double(std::string_view(name).substr(us + 1));
    if (out.empty() || out.back().channel_id != id) {
      out.push_back({Matrix(), fs_hz, {}, id});
    }
    out.back().wavelengths_nm.push_back(wl);
  }
  std::size_t c0 = 0;
  for (auto& ch : out) {
    const std::size_t W = ch.wavelengths_nm.size();
    ch.samples = Matrix(nm.data.rows(), W);
    for (std::size_t t = 0; t < nm.data.rows(); ++t)
      for (std::size_t w = 0; w < W; ++w) ch.samples(t, w) = nm.data(t, c0 + w);
    c0 += W;
  }
  return out;
}

// frames

// Blob layout, little-endian: 8-byte magic, u32 version, u32 dtype
// (1 = float64 in [0, 1], 2 = uint8), u64 T, H, W, C (= 3), then T*H*W*C values.
inline constexpr char kFrameMagic[8] = {'S', 'K', 'F', 'R', 'A', 'M', 'E', 'S'};
inline constexpr std::uint32_t kFrameBlobVersion = 1;
enum class FrameDtype : std::uint32_t { float64 = 1, uint8 = 2 };

namespace detail {

static_assert(std::endian::native == std::endian::little, "frame blobs assume a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view& in, const std::string& origin) {
  if (in.size() < sizeof(T)) throw io_error(origin + ": truncated frame blob");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace detail

inline std::string frames_to_blob(std::span<const Frame> frames, FrameDtype dtype = FrameDtype::float64) {
  if (frames.empty()) throw std::invalid_argument("frames_to_blob: no frames");
  const std::size_t H = frames.front().height, W = frames.front().width;
  std::string out(kFrameMagic, sizeof kFrameMagic);
  detail::put<std::uint32_t>(out, kFrameBlobVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(dtype));
  for (std::uint64_t d : {static_cast<std::uint64_t>(frames.size()), static_cast<std::uint64_t>(H),
                          static_cast<std::uint64_t>(W), std::uint64_t{3}})
    detail::put(out, d);
  for (const auto& f : frames) {
    validate_frame(f);
    if (f.height != H || f.width != W) throw std::invalid_argument("frames_to_blob: frames differ in size");
    for (double v : f.pixels) {
      if (dtype == FrameDtype::float64) detail::put(out, v);
      else out.push_back(static_cast<char>(detail::to_byte(v)));
    }
  }
  return out;
}

inline std::vector<Frame> frames_from_blob(std::string_view in, const std::string& origin = "frame blob") {
  if (in.size() < sizeof kFrameMagic || std::memcmp(in.data(), kFrameMagic, sizeof kFrameMagic) != 0)
    throw io_error(origin + ": bad magic");
  in.remove_prefix(sizeof kFrameMagic);
  if (detail::take<std::uint32_t>(in, origin) != kFrameBlobVersion) throw io_error(origin + ": unsupported version");
  const auto dtype = static_cast<FrameDtype>(detail::take<std::uint32_t>(in, origin));
  if (dtype != FrameDtype::float64 && dtype != FrameDtype::uint8) throw io_error(origin + ": unknown dtype");
  const auto T = detail::take<std::uint64_t>(in, origin);
  const auto H = detail::take<std::uint64_t>(in, origin);
  const auto W = detail::take<std::uint64_t>(in, origin);
  const auto C = detail::take<std::uint64_t>(in, origin);
  if (C != 3) throw io_error(origin + ": frames must have 3 channels");
  if (H < kMinFrameSide || W < kMinFrameSide || H > 1u << 16 || W > 1u << 16) throw io_error(origin + ": bad frame size");
  const std::size_t per = (dtype == FrameDtype::float64 ? 8 : 1) * H * W * 3;
  if (T == 0 || in.size() != per * T) throw io_error(origin + ": payload size does not match header");
  std::vector<Frame> frames;
  frames.reserve(T);
  for (std::uint64_t t = 0; t < T; ++t) {
    Frame f(H, W);
    for (double& v : f.pixels) v = dtype == FrameDtype::float64 ? detail::take<double>(in, origin)
                                                                  : detail::take<std::uint8_t>(in, origin) / 255.0;
    validate_frame(f);
    frames.push_back(std::move(f));
  }
  return frames;
}

// Binary PPM (P6, maxval 255).
inline std::string frame_to_ppm(const Frame& f) {
  validate_frame(f);
  std::string out = "P6\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  for (double v : f.pixels) out.push_back(static_cast<char>(detail::to_byte(v)));
  return out;
}

inline Frame frame_from_ppm(const std::string& data, const std::string& origin = "ppm") {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw io_error(origin + ": truncated header");
    return data.substr(start, pos - start);
  };
  const auto magic = token();
  if (magic != "P6" && magic != "P3") throw io_error(origin + ": only P6 and P3 images are supported");
  const auto w = static_cast<std::size_t>(parse_double(token()));
  const auto h = static_cast<std::size_t>(parse_double(token()));
  const double maxval = parse_double(token());
  if (!(maxval >= 1 && maxval <= 255)) throw io_error(origin + ": maxval must be in [1, 255]");
  Frame f(h, w);
  if (magic == "P6") {
    ++pos;  // single whitespace after maxval
    if (data.size() - pos != f.pixels.size()) throw io_error(origin + ": pixel payload size mismatch");
    for (std::size_t i = 0; i < f.pixels.size(); ++i)
      f.pixels[i] = static_cast<unsigned char>(data[pos + i]) / maxval;
  } else {
    for (double& v : f.pixels) v = parse_double(token()) / maxval;
  }
  validate_frame(f);
  return f;
}

// Image files of a directory in lexicographic (= temporal) order.
inline std::vector<Frame> read_frame_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw io_error(dir.string() + ": no .ppm frames");
  std::vector<Frame> frames;
  for (const auto& p : files) frames.push_back(frame_from_ppm(read_file(p), p.string()));
  return frames;
}

inline void write_frame_directory(const fs::path& dir, std::span<const Frame> frames) {
  const int digits = std::max<int>(6, static_cast<int>(std::to_string(frames.size()).size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::string n = std::to_string(i);
    n.insert(0, static_cast<std::size_t>(digits) - n.size(), '0');
    write_file_atomic(dir / ("frame_" + n + ".ppm"), frame_to_ppm(frames[i]));
  }
}

inline constexpr std::string_view kFrameBlobExtension = ".frames";

inline bool is_frame_source(const fs::path& p) { return p.extension() == kFrameBlobExtension || fs::is_directory(p); }

inline std::vector<Frame> read_frames(const fs::path& p) {
  if (fs::is_directory(p)) return read_frame_directory(p);
  return frames_from_blob(read_file(p), p.string());
}

}  // namespace skillfuse
