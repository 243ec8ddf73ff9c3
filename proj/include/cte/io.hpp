#pragma once

// File formats: joint spike records as `time,channel` CSV, single trains as
// one time per line, and atomic writes through a temporary file.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cte/core.hpp"

namespace cte::io {

// Result values: 9 significant digits.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Event times: shortest form that round-trips exactly.
inline std::string fmt_time(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes through `path.tmp` and renames, so readers never see partial files.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot rename onto " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The interval is kept in a leading comment so files round-trip.
inline std::string record_to_csv(const JointSpikeRecord& rec) {
  std::ostringstream os;
  os << "# start=" << fmt_time(rec.start_time()) << " end=" << fmt_time(rec.end_time()) << "\n";
  os << "time,channel\n";
  for (const auto& e : merge_event_streams(rec))
    os << fmt_time(e.time) << ',' << channel_char(e.channel) << '\n';
  return os.str();
}

inline void write_record(const std::filesystem::path& path, const JointSpikeRecord& rec) {
  atomic_write(path, record_to_csv(rec));
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || !std::isfinite(v))
    throw Error(ErrorKind::kValidation, "line " + std::to_string(line) + ": bad number '" + s + "'",
                "time");
  return v;
}

inline void parse_interval_comment(const std::string& line, std::optional<double>& start,
                                   std::optional<double>& end) {
  std::istringstream is(line.substr(1));
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "start") start = std::stod(val);
    if (key == "end") end = std::stod(val);
  }
}

}  // namespace detail

// Parses a record. The interval comes from explicit arguments, else the
// `# start= end=` comment, else [0, last event] with the end nudged past the
// last event.
inline JointSpikeRecord record_from_csv(const std::string& text,
                                        std::optional<double> start = std::nullopt,
                                        std::optional<double> end = std::nullopt) {
  std::istringstream in(text);
  std::string line;
  std::optional<double> c_start, c_end;
  std::vector<double> xs, ys;
  bool header = false;
  double prev = -kUnbounded;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      detail::parse_interval_comment(line, c_start, c_end);
      continue;
    }
    if (!header) {
      if (line != "time,channel")
        throw Error(ErrorKind::kValidation, "expected header 'time,channel'", "header");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorKind::kValidation, "line " + std::to_string(n) + ": expected time,channel",
                  "channel");
    const double t = detail::parse_double(detail::trim(line.substr(0, comma)), n);
    const auto ch = detail::trim(line.substr(comma + 1));
    if (t < prev)
      throw Error(ErrorKind::kOrdering,
                  "ordering violation: line " + std::to_string(n) + " is not sorted by time");
    prev = t;
    if (ch == "x")
      xs.push_back(t);
    else if (ch == "y")
      ys.push_back(t);
    else
      throw Error(ErrorKind::kValidation,
                  "line " + std::to_string(n) + ": channel must be x or y", "channel");
  }
  if (!header) throw Error(ErrorKind::kValidation, "missing header 'time,channel'", "header");
  double first = 0.0;
  if (!xs.empty()) first = std::min(first, xs.front());
  if (!ys.empty()) first = std::min(first, ys.front());
  const double s = start.value_or(c_start.value_or(first));
  double e = end.value_or(c_end.value_or(std::nextafter(std::max(prev, s), kUnbounded)));
  return make_joint_record(s, e, std::move(xs), std::move(ys));
}

inline JointSpikeRecord read_record(const std::filesystem::path& path,
                                    std::optional<double> start = std::nullopt,
                                    std::optional<double> end = std::nullopt) {
  return record_from_csv(read_file(path), start, end);
}

// One time per line; `#` comments and blank lines ignored.
inline SpikeTrain train_from_text(const std::string& text, double start, double end) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> ev;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const double t = detail::parse_double(line, n);
    if (!ev.empty() && t <= ev.back())
      throw Error(ErrorKind::kOrdering,
                  "ordering violation: line " + std::to_string(n) + " is not increasing");
    ev.push_back(t);
  }
  return SpikeTrain(start, end, std::move(ev));
}

inline SpikeTrain read_train(const std::filesystem::path& path, double start, double end) {
  return train_from_text(read_file(path), start, end);
}

}  // namespace cte::io
