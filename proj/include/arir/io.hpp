#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "arir/asdm.hpp"
#include "arir/pipeline.hpp"
#include "arir/renderer.hpp"
#include "arir/types.hpp"

namespace arir {

// ---------------------------------------------------------------------------
// WAV (RIFF, 32-bit float, interleaved multichannel)
// ---------------------------------------------------------------------------

struct WavData {
  MatrixXd samples;  // channels x frames
  double sample_rate = 0.0;
};

namespace detail {

inline void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  std::memcpy(&v, p, 4);
  return v;
}
inline uint16_t get_u16(const char* p) {
  uint16_t v = 0;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace detail

inline void write_wav(const std::string& path, const MatrixXd& samples,
                      double sample_rate) {
  const uint16_t channels = static_cast<uint16_t>(samples.rows());
  const uint32_t frames = static_cast<uint32_t>(samples.cols());
  const uint32_t data_bytes = frames * channels * 4;

  std::string buf;
  buf.reserve(58 + data_bytes);
  buf += "RIFF";
  detail::put_u32(buf, 4 + 26 + 8 + data_bytes);
  buf += "WAVE";
  buf += "fmt ";
  detail::put_u32(buf, 18);
  detail::put_u16(buf, 3);  // IEEE float
  detail::put_u16(buf, channels);
  detail::put_u32(buf, static_cast<uint32_t>(std::lround(sample_rate)));
  detail::put_u32(buf, static_cast<uint32_t>(std::lround(sample_rate)) *
                           channels * 4);
  detail::put_u16(buf, channels * 4);
  detail::put_u16(buf, 32);
  detail::put_u16(buf, 0);  // no extension
  buf += "data";
  detail::put_u32(buf, data_bytes);
  for (uint32_t t = 0; t < frames; ++t)
    for (uint16_t ch = 0; ch < channels; ++ch) {
      const float v = static_cast<float>(samples(ch, t));
      char raw[4];
      std::memcpy(raw, &v, 4);
      buf.append(raw, 4);
    }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("write_wav: write failed for " + path);
}

inline WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_wav: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 44 || buf.compare(0, 4, "RIFF") != 0 ||
      buf.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);

  WavData out;
  uint16_t format = 0, channels = 0, bits = 0;
  size_t pos = 12;
  bool have_fmt = false, have_data = false;
  size_t data_off = 0, data_len = 0;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const uint32_t len = detail::get_u32(buf.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + len > buf.size())
      throw std::runtime_error("read_wav: truncated chunk in " + path);
    if (id == "fmt ") {
      if (len < 16) throw std::runtime_error("read_wav: bad fmt chunk");
      format = detail::get_u16(buf.data() + body);
      channels = detail::get_u16(buf.data() + body + 2);
      out.sample_rate = detail::get_u32(buf.data() + body + 4);
      bits = detail::get_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = len;
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("read_wav: missing fmt/data chunk in " + path);
  if (channels == 0) throw std::runtime_error("read_wav: zero channels");
  if (format == 3 && bits == 32) {
    const size_t frames = data_len / (4 * channels);
    out.samples.resize(channels, frames);
    for (size_t t = 0; t < frames; ++t)
      for (uint16_t ch = 0; ch < channels; ++ch) {
        float v;
        std::memcpy(&v, buf.data() + data_off + 4 * (t * channels + ch), 4);
        out.samples(ch, t) = v;
      }
  } else if (format == 1 && bits == 16) {
    const size_t frames = data_len / (2 * channels);
    out.samples.resize(channels, frames);
    for (size_t t = 0; t < frames; ++t)
      for (uint16_t ch = 0; ch < channels; ++ch) {
        int16_t v;
        std::memcpy(&v, buf.data() + data_off + 2 * (t * channels + ch), 2);
        out.samples(ch, t) = v / 32768.0;
      }
  } else {
    throw std::runtime_error("read_wav: unsupported format (" +
                             std::to_string(format) + "/" +
                             std::to_string(bits) + " bit) in " + path);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid manifest
// ---------------------------------------------------------------------------

inline constexpr int kManifestSchemaVersion = 1;

/// SN3D -> N3D channel scale for ACN channel `acn`: sqrt(2n+1).
inline double sn3d_to_n3d_scale(int acn) {
  const int n = static_cast<int>(std::sqrt(static_cast<double>(acn)));
  return std::sqrt(2.0 * n + 1.0);
}

struct ManifestEntry {
  std::string wav_path;
  Vector3d position;
};

struct GridManifest {
  int schema = kManifestSchemaVersion;
  double sample_rate = 44100.0;
  int order = 1;
  std::string normalization = "N3D";  // N3D | SN3D
  std::string channel_order = "ACN";
  double spacing = 1.0;
  double speed_of_sound = kDefaultSpeedOfSound;
  std::vector<ManifestEntry> entries;
  bool has_source = false;
  Vector3d source_position = Vector3d::Zero();
  double system_delay = 0.0;
};

inline GridManifest parse_manifest(const nlohmann::json& j) {
  GridManifest m;
  m.schema = j.value("schema", kManifestSchemaVersion);
  if (m.schema != kManifestSchemaVersion)
    throw std::runtime_error("manifest: unsupported schema version " +
                             std::to_string(m.schema));
  m.sample_rate = j.at("sample_rate").get<double>();
  m.order = j.at("order").get<int>();
  m.normalization = j.value("normalization", std::string("N3D"));
  if (m.normalization != "N3D" && m.normalization != "SN3D")
    throw std::runtime_error("manifest: unknown normalization tag '" +
                             m.normalization + "'");
  m.channel_order = j.value("channel_order", std::string("ACN"));
  if (m.channel_order != "ACN")
    throw std::runtime_error("manifest: unsupported channel order tag '" +
                             m.channel_order + "'");
  m.spacing = j.at("spacing").get<double>();
  m.speed_of_sound = j.value("speed_of_sound", kDefaultSpeedOfSound);
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.wav_path = e.at("wav_path").get<std::string>();
    const auto& p = e.at("position");
    entry.position = Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                              p.at(2).get<double>());
    m.entries.push_back(entry);
  }
  if (m.entries.size() < 3)
    throw std::runtime_error("manifest: needs at least 3 entries");
  if (j.contains("source_position")) {
    const auto& p = j["source_position"];
    m.source_position = Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                 p.at(2).get<double>());
    m.has_source = true;
  }
  m.system_delay = j.value("system_delay", 0.0);
  return m;
}

inline nlohmann::json manifest_to_json(const GridManifest& m) {
  nlohmann::json j;
  j["schema"] = m.schema;
  j["sample_rate"] = m.sample_rate;
  j["order"] = m.order;
  j["normalization"] = m.normalization;
  j["channel_order"] = m.channel_order;
  j["spacing"] = m.spacing;
  j["speed_of_sound"] = m.speed_of_sound;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back(
        {{"wav_path", e.wav_path},
         {"position", {e.position.x(), e.position.y(), e.position.z()}}});
  if (m.has_source)
    j["source_position"] = {m.source_position.x(), m.source_position.y(),
                            m.source_position.z()};
  if (m.system_delay != 0.0) j["system_delay"] = m.system_delay;
  return j;
}

/// Loads a grid from a manifest. SN3D-tagged audio is rescaled to N3D; all
/// ARIRs are zero-padded to the common maximum length.
inline ArirGrid load_grid(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f)
    throw std::runtime_error("load_grid: cannot open manifest " + manifest_path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_grid: manifest parse error: " +
                             std::string(e.what()));
  }
  const GridManifest m = parse_manifest(j);
  const std::filesystem::path base =
      std::filesystem::path(manifest_path).parent_path();
  const int want_channels = num_sh_channels(m.order);

  ArirGrid grid;
  grid.spacing = m.spacing;
  grid.speed_of_sound = m.speed_of_sound;
  grid.plane_height = m.entries.front().position.z();

  long max_len = 0;
  for (const auto& e : m.entries) {
    const std::string path = (base / e.wav_path).string();
    if (!std::filesystem::exists(path))
      throw std::runtime_error("load_grid: missing file for entry '" +
                               e.wav_path + "'");
    WavData wav = read_wav(path);
    if (wav.samples.rows() != want_channels)
      throw std::runtime_error(
          "load_grid: '" + e.wav_path + "' has " +
          std::to_string(wav.samples.rows()) + " channels, expected " +
          std::to_string(want_channels) + " for order " +
          std::to_string(m.order));
    if (std::abs(wav.sample_rate - m.sample_rate) > 0.5)
      throw std::runtime_error("load_grid: '" + e.wav_path +
                               "' sample rate mismatch");
    Arir a;
    a.order = m.order;
    a.sample_rate = m.sample_rate;
    a.position = e.position;
    a.channels = wav.samples;
    if (m.normalization == "SN3D")
      for (int ch = 0; ch < want_channels; ++ch)
        a.channels.row(ch) *= sn3d_to_n3d_scale(ch);
    max_len = std::max(max_len, a.length());
    grid.arirs.push_back(std::move(a));
  }
  for (auto& a : grid.arirs)
    if (a.length() < max_len)
      a.channels.conservativeResizeLike(
          MatrixXd::Zero(a.num_channels(), max_len));
  grid.validate();
  return grid;
}

/// Writes one ARIR as a 32-bit float ACN WAV; `normalization` is N3D
/// (as stored internally) or SN3D (rescaled on write).
inline void store_arir(const Arir& arir, const std::string& path,
                       const std::string& normalization = "N3D") {
  MatrixXd samples = arir.channels;
  if (normalization == "SN3D") {
    for (int ch = 0; ch < samples.rows(); ++ch)
      samples.row(ch) /= sn3d_to_n3d_scale(ch);
  } else if (normalization != "N3D") {
    throw std::runtime_error("store_arir: unknown normalization tag '" +
                             normalization + "'");
  }
  write_wav(path, samples, arir.sample_rate);
}

// ---------------------------------------------------------------------------
// Pipeline / renderer configuration
// ---------------------------------------------------------------------------

struct ToolConfig {
  PipelineConfig pipeline;
  AsdmConfig asdm;
  double r_fine = 0.25;
  double late_split = 0.100;
  long frame_size = 1024;
  double speed_of_sound = kDefaultSpeedOfSound;
};

inline void apply_config_json(const nlohmann::json& j, ToolConfig& cfg) {
  auto num = [&](const char* key, double& target) {
    if (j.contains(key)) target = j.at(key).get<double>();
  };
  num("prominence_db", cfg.pipeline.peaks.prominence_db);
  num("floor_db", cfg.pipeline.peaks.floor_db);
  num("early_window", cfg.pipeline.peaks.early_window);
  if (j.contains("match_count"))
    cfg.pipeline.matching.match_count = j.at("match_count").get<int>();
  num("accept_cost", cfg.pipeline.matching.accept_cost);
  num("dz", cfg.pipeline.matching.dz);
  num("alpha_decay", cfg.pipeline.matching.alpha_decay);
  num("match_window", cfg.pipeline.matching.match_window);
  if (j.contains("dz")) cfg.pipeline.dz = j.at("dz").get<double>();
  if (j.contains("pre_samples"))
    cfg.pipeline.interp.pre_samples = j.at("pre_samples").get<int>();
  num("max_segment", cfg.pipeline.interp.max_segment);
  if (j.contains("fade_samples"))
    cfg.pipeline.interp.fade_samples = j.at("fade_samples").get<int>();
  if (j.contains("xcorr_range"))
    cfg.pipeline.interp.xcorr_range = j.at("xcorr_range").get<int>();
  num("residual_limit", cfg.pipeline.interp.residual_limit);
  if (j.contains("timeshift_window"))
    cfg.pipeline.interp.timeshift_window = j.at("timeshift_window").get<int>();
  if (j.contains("orientation_correct"))
    cfg.pipeline.orientation_correct = j.at("orientation_correct").get<bool>();
  num("orientation_threshold_deg", cfg.pipeline.orientation_threshold_deg);
  if (j.contains("asdm_order"))
    cfg.asdm.target_order = j.at("asdm_order").get<int>();
  num("decorrelation_start", cfg.asdm.decorrelation_start);
  num("tau", cfg.asdm.tau);
  if (j.contains("phi_hat_deg"))
    cfg.asdm.phi_hat = j.at("phi_hat_deg").get<double>() *
                       std::numbers::pi / 180.0;
  if (j.contains("q_max")) cfg.asdm.q_max = j.at("q_max").get<int>();
  num("r_fine", cfg.r_fine);
  num("late_split", cfg.late_split);
  if (j.contains("frame_size"))
    cfg.frame_size = j.at("frame_size").get<long>();
  num("speed_of_sound", cfg.speed_of_sound);
}

inline ToolConfig load_config(const std::string& path) {
  ToolConfig cfg;
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_config: cannot open " + path);
  nlohmann::json j;
  f >> j;
  apply_config_json(j, cfg);
  return cfg;
}

inline nlohmann::json config_to_json(const ToolConfig& cfg) {
  nlohmann::json j;
  j["prominence_db"] = cfg.pipeline.peaks.prominence_db;
  j["floor_db"] = cfg.pipeline.peaks.floor_db;
  j["early_window"] = cfg.pipeline.peaks.early_window;
  j["match_count"] = cfg.pipeline.matching.match_count;
  j["accept_cost"] = cfg.pipeline.matching.accept_cost;
  j["dz"] = cfg.pipeline.matching.dz;
  j["alpha_decay"] = cfg.pipeline.matching.alpha_decay;
  j["match_window"] = cfg.pipeline.matching.match_window;
  j["pre_samples"] = cfg.pipeline.interp.pre_samples;
  j["max_segment"] = cfg.pipeline.interp.max_segment;
  j["fade_samples"] = cfg.pipeline.interp.fade_samples;
  j["xcorr_range"] = cfg.pipeline.interp.xcorr_range;
  j["residual_limit"] = cfg.pipeline.interp.residual_limit;
  j["timeshift_window"] = cfg.pipeline.interp.timeshift_window;
  j["orientation_correct"] = cfg.pipeline.orientation_correct;
  j["orientation_threshold_deg"] = cfg.pipeline.orientation_threshold_deg;
  j["asdm_order"] = cfg.asdm.target_order;
  j["decorrelation_start"] = cfg.asdm.decorrelation_start;
  j["tau"] = cfg.asdm.tau;
  j["phi_hat_deg"] = cfg.asdm.phi_hat * 180.0 / std::numbers::pi;
  j["q_max"] = cfg.asdm.q_max;
  j["r_fine"] = cfg.r_fine;
  j["late_split"] = cfg.late_split;
  j["frame_size"] = cfg.frame_size;
  j["speed_of_sound"] = cfg.speed_of_sound;
  return j;
}

// ---------------------------------------------------------------------------
// Trajectory file: list of {t_seconds, x, y, z, yaw, pitch, roll}
// ---------------------------------------------------------------------------

inline Trajectory load_trajectory(const std::string& path, long frame_size) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_trajectory: cannot open " + path);
  nlohmann::json j;
  f >> j;
  Trajectory traj;
  traj.frame_size = frame_size;
  const auto& list = j.is_array() ? j : j.at("trajectory");
  for (const auto& e : list) {
    TrajectoryPoint p;
    p.time = e.at("t_seconds").get<double>();
    p.pose.position = Vector3d(e.at("x").get<double>(), e.at("y").get<double>(),
                               e.at("z").get<double>());
    p.pose.yaw_pitch_roll =
        Vector3d(e.value("yaw", 0.0), e.value("pitch", 0.0),
                 e.value("roll", 0.0));
    traj.points.push_back(p);
  }
  if (traj.points.empty())
    throw std::runtime_error("load_trajectory: empty trajectory in " + path);
  std::sort(traj.points.begin(), traj.points.end(),
            [](const TrajectoryPoint& a, const TrajectoryPoint& b) {
              return a.time < b.time;
            });
  return traj;
}

}  // namespace arir
