#include "asymdelay/io.hpp"

#include <array>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "asymdelay/errors.hpp"

namespace asymdelay::io {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'D', 'T', 'S', 'T', 'R', 'M', '1'};

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  return in;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!in) throw ConfigError("truncated timestamp stream file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " value '" + text + "'");
  }
}

}  // namespace

void write_stream_binary(const TimestampStream& stream, const std::filesystem::path& path) {
  auto out = open_out(path, true);
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, stream.seed);
  put_u64(out, stream.config_hash);
  put_u64(out, std::bit_cast<std::uint64_t>(stream.duration_s));
  put_u64(out, stream.records.size());
  for (const auto& r : stream.records) out.put(static_cast<char>(r.detector));
  for (const auto& r : stream.records) put_u64(out, static_cast<std::uint64_t>(r.time_ps));
  for (const auto& r : stream.records) put_u64(out, r.true_pair_id);
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

TimestampStream read_stream_binary(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("'" + path.string() + "' is not a timestamp stream file");
  TimestampStream s;
  s.seed = get_u64(in);
  s.config_hash = get_u64(in);
  s.duration_s = std::bit_cast<double>(get_u64(in));
  const std::uint64_t n = get_u64(in);
  s.records.resize(n);
  for (auto& r : s.records) {
    const int id = in.get();
    if (id < 0 || id >= static_cast<int>(kDetectorCount)) throw ConfigError("bad detector id in stream file");
    r.detector = static_cast<DetectorId>(id);
  }
  for (auto& r : s.records) r.time_ps = static_cast<std::int64_t>(get_u64(in));
  for (auto& r : s.records) r.true_pair_id = get_u64(in);
  return s;
}

void write_stream_csv(const TimestampStream& stream, const std::filesystem::path& path) {
  auto out = open_out(path);
  char header[160];
  std::snprintf(header, sizeof header, "# seed=%" PRIu64 " config_hash=%016" PRIx64 " duration_s=%.17g\n",
                stream.seed, stream.config_hash, stream.duration_s);
  out << header << "detector,time_ps\n";
  for (const auto& r : stream.records) out << detector_name(r.detector) << ',' << r.time_ps << '\n';
}

TimestampStream read_stream_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  TimestampStream s;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream ss(line.substr(1));
      std::string token;
      while (ss >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        if (key == "seed") s.seed = std::stoull(value);
        if (key == "config_hash") s.config_hash = std::stoull(value, nullptr, 16);
        if (key == "duration_s") s.duration_s = parse_double(value, "duration_s");
      }
      continue;
    }
    if (!header_seen) {
      if (line != "detector,time_ps") throw ConfigError("stream CSV: expected header 'detector,time_ps'");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw ConfigError("stream CSV: malformed row '" + line + "'");
    s.records.push_back({detector_from_name(cells[0]), std::stoll(cells[1]), kNoPair});
  }
  return s;
}

void write_series_csv(const ClockDifferenceSeries& series, std::ostream& out, double reference_ps) {
  out << "epoch_start_s,tau_ab_ps,tau_aba_ps,delta_ps,delta_rezeroed_ps\n";
  for (const auto& p : series.points) {
    out << format("%.6f", p.epoch_start_s);
    if (p.is_gap()) {
      out << ",,,,\n";
      continue;
    }
    out << ',' << format("%.4f", p.tau_ab_ps) << ',' << format("%.4f", p.tau_aba_ps) << ','
        << format("%.4f", p.delta_ps) << ',' << format("%.4f", p.delta_ps - reference_ps) << '\n';
  }
}

void write_series_csv(const ClockDifferenceSeries& series, const std::filesystem::path& path,
                      double reference_ps) {
  auto out = open_out(path);
  write_series_csv(series, out, reference_ps);
}

ClockDifferenceSeries read_series_csv(const std::filesystem::path& path, double epoch_length_s) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("series CSV '" + path.string() + "' is empty");
  const auto header = split_csv(trim(line));
  auto column = [&](const char* name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ConfigError(std::string("series CSV: missing column '") + name + "'");
  };
  const std::size_t c_epoch = column("epoch_start_s");
  const std::size_t c_ab = column("tau_ab_ps");
  const std::size_t c_aba = column("tau_aba_ps");
  const std::size_t c_delta = column("delta_ps");

  ClockDifferenceSeries series;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    cells.resize(std::max(cells.size(), header.size()));
    ClockDifferencePoint p;
    p.epoch_start_s = parse_double(cells[c_epoch], "epoch_start_s");
    if (!cells[c_delta].empty()) {
      p.delta_ps = parse_double(cells[c_delta], "delta_ps");
      if (!cells[c_ab].empty()) p.tau_ab_ps = parse_double(cells[c_ab], "tau_ab_ps");
      if (!cells[c_aba].empty()) p.tau_aba_ps = parse_double(cells[c_aba], "tau_aba_ps");
    }
    series.points.push_back(p);
  }
  if (epoch_length_s > 0.0) {
    series.epoch_length_s = epoch_length_s;
  } else if (series.points.size() >= 2) {
    series.epoch_length_s = series.points[1].epoch_start_s - series.points[0].epoch_start_s;
  }
  if (!(series.epoch_length_s > 0.0)) throw ConfigError("series CSV: cannot infer epoch length");
  return series;
}

void write_tdev_csv(const TdevCurve& curve, std::ostream& out) {
  out << "tau_s,tdev_ps,m,n_terms\n";
  for (const auto& p : curve.points) {
    out << format("%.6f", p.tau_s) << ',' << format("%.9g", p.tdev_ps) << ',' << p.m << ',' << p.n_terms
        << '\n';
  }
}

void write_tdev_csv(const TdevCurve& curve, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_tdev_csv(curve, out);
}

void write_alarms_csv(const std::vector<Alarm>& alarms, std::ostream& out) {
  out << "epoch_start_s,kind,magnitude_ps\n";
  for (const auto& a : alarms) {
    out << format("%.6f", a.epoch_start_s) << ',' << alarm_kind_name(a.kind) << ','
        << format("%.4f", a.magnitude_ps) << '\n';
  }
}

void write_alarms_csv(const std::vector<Alarm>& alarms, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_alarms_csv(alarms, out);
}

nlohmann::json to_json(const DetectionScore& score) {
  nlohmann::json j;
  j["detected"] = score.detected;
  j["latency_s"] = score.latency_s ? nlohmann::json(*score.latency_s) : nlohmann::json(nullptr);
  j["false_alarms"] = score.false_alarms;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace asymdelay::io
