// Command-line front end for the ARIR grid interpolation library:
// simulate, enhance, localize, precompute, interpolate, render.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arir/arir.hpp"

namespace fs = std::filesystem;

namespace {

arir::ToolConfig make_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  return arir::load_config(config_path);
}

arir::Vector3d parse_vec3(const std::string& s, const char* what) {
  arir::Vector3d v;
  std::stringstream ss(s);
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, tok, ','))
      throw std::runtime_error(std::string(what) + ": expected x,y,z");
    v(i) = std::stod(tok);
  }
  return v;
}

arir::ListenerPose parse_pose(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.size() != 3 && vals.size() != 6)
    throw std::runtime_error("pose: expected x,y,z or x,y,z,yaw,pitch,roll");
  arir::ListenerPose pose;
  pose.position = arir::Vector3d(vals[0], vals[1], vals[2]);
  if (vals.size() == 6)
    pose.yaw_pitch_roll = arir::Vector3d(vals[3], vals[4], vals[5]) *
                          std::numbers::pi / 180.0;
  return pose;
}

void write_grid(const arir::ArirGrid& grid, const std::string& out_dir,
                int order) {
  fs::create_directories(out_dir);
  arir::GridManifest m;
  m.sample_rate = grid.arirs.front().sample_rate;
  m.order = order;
  m.spacing = grid.spacing;
  m.speed_of_sound = grid.speed_of_sound;
  for (size_t i = 0; i < grid.arirs.size(); ++i) {
    const std::string name = "arir_" + std::to_string(i) + ".wav";
    arir::store_arir(grid.arirs[i], (fs::path(out_dir) / name).string());
    m.entries.push_back({name, grid.arirs[i].position});
  }
  std::ofstream f((fs::path(out_dir) / "grid.json").string());
  f << arir::manifest_to_json(m).dump(2) << "\n";
}

int cmd_simulate(const std::string& room_s, const std::string& source_s,
                 const std::string& grid_s, const std::string& out_dir,
                 int sh_order, int max_order, double absorption,
                 double tail_t60) {
  arir::ShoeboxRoom room;
  if (!room_s.empty()) room.dimensions = parse_vec3(room_s, "--room");
  room.wall_absorption.fill(absorption);
  const arir::Vector3d source = parse_vec3(source_s, "--source");

  // grid spec: nx,ny,spacing,z
  std::vector<double> g;
  std::stringstream ss(grid_s);
  std::string tok;
  while (std::getline(ss, tok, ',')) g.push_back(std::stod(tok));
  if (g.size() != 4)
    throw std::runtime_error("--grid: expected nx,ny,spacing,z");

  arir::SimulationConfig cfg;
  cfg.sh_order = sh_order;
  cfg.max_reflection_order = max_order;
  cfg.diffuse_tail_t60 = tail_t60;
  const auto receivers = arir::lattice_receivers(
      room, static_cast<int>(g[0]), static_cast<int>(g[1]), g[2], g[3]);
  const auto grid = arir::simulate_arir_grid(room, source, receivers, g[2], cfg);
  write_grid(grid, out_dir, sh_order);
  std::cout << "wrote " << grid.size() << " ARIRs to " << out_dir << "\n";
  return 0;
}

int cmd_enhance(const std::string& manifest, const std::string& out_dir,
                const arir::ToolConfig& cfg) {
  const arir::ArirGrid grid = arir::load_grid(manifest);
  arir::ArirGrid out = grid;
  for (size_t i = 0; i < grid.arirs.size(); ++i)
    out.arirs[i] = arir::asdm_enhance(grid.arirs[i], cfg.asdm);
  write_grid(out, out_dir, cfg.asdm.target_order);
  std::cout << "enhanced " << out.size() << " ARIRs to order "
            << cfg.asdm.target_order << " in " << out_dir << "\n";
  return 0;
}

int cmd_localize(const std::string& manifest, const arir::ToolConfig& cfg) {
  const arir::ArirGrid grid = arir::load_grid(manifest);
  const auto pre = arir::preprocess(grid, cfg.pipeline);
  const auto& s = pre.source.position;
  std::cout << "source " << s.x() << " " << s.y() << " " << s.z()
            << " system_delay " << pre.system_delay << "\n";
  // per-cell matched sound events
  for (int cy = 0; cy + 1 < pre.lattice.ny; ++cy)
    for (int cx = 0; cx + 1 < pre.lattice.nx; ++cx) {
      arir::Vector3d center(pre.lattice.x0 + (cx + 0.5) * pre.lattice.spacing,
                            pre.lattice.y0 + (cy + 0.5) * pre.lattice.spacing,
                            pre.grid.plane_height);
      const auto sel = arir::select_triplet(center, pre.lattice);
      for (const auto& m : pre.matches_for(sel.indices)) {
        const auto& x = m.event.position;
        std::cout << "event cell " << cx << "," << cy << " pos " << x.x()
                  << " " << x.y() << " " << x.z() << " cost " << m.cost
                  << "\n";
      }
    }
  return 0;
}

int cmd_interpolate(const std::string& manifest, const std::string& pose_s,
                    const std::string& out_path,
                    const arir::ToolConfig& cfg) {
  const arir::ArirGrid grid = arir::load_grid(manifest);
  const auto pre = arir::preprocess(grid, cfg.pipeline);
  const arir::Arir out =
      arir::synthesize_perspective(pre, parse_pose(pose_s));
  arir::store_arir(out, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_precompute(const std::string& manifest, const std::string& out_dir,
                   const arir::ToolConfig& cfg) {
  const arir::ArirGrid grid = arir::load_grid(manifest);
  const auto pre = arir::preprocess(grid, cfg.pipeline);
  const auto fine = arir::precompute_fine_grid(pre, cfg.r_fine, cfg.late_split);
  write_grid({.arirs = fine.arirs,
              .spacing = fine.spacing,
              .plane_height = grid.plane_height,
              .speed_of_sound = grid.speed_of_sound},
             out_dir, fine.arirs.front().order);
  std::cout << "wrote " << fine.arirs.size() << " fine-grid ARIRs to "
            << out_dir << "\n";
  return 0;
}

int cmd_render(const std::string& manifest, const std::string& traj_path,
               const std::string& in_path, const std::string& out_path,
               const arir::ToolConfig& cfg) {
  const arir::ArirGrid grid = arir::load_grid(manifest);
  const auto pre = arir::preprocess(grid, cfg.pipeline);
  const auto fine = arir::precompute_fine_grid(pre, cfg.r_fine, cfg.late_split);
  const auto traj = arir::load_trajectory(traj_path, cfg.frame_size);
  const arir::WavData in = arir::read_wav(in_path);
  if (in.samples.rows() != 1)
    throw std::runtime_error("render: input must be single-channel");
  const arir::MatrixXd out = arir::stream_convolve(
      in.samples.row(0).transpose(), traj, fine);
  arir::write_wav(out_path, out, in.sample_rate);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ambisonic room impulse response grid toolkit"};
  app.require_subcommand(0, 1);

  std::string config_path, manifest, out_path, out_dir, pose_s, room_s,
      source_s, grid_s, traj_path, in_path;
  int sh_order = 3, max_order = 2;
  double absorption = 0.3, tail_t60 = 0.0;
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config,
               "Print the effective configuration as JSON and exit");
  app.add_option("--config", config_path,
                 "JSON file overriding the built-in defaults");

  auto* sim = app.add_subcommand("simulate", "Image-source shoebox simulation");
  sim->add_option("--room", room_s, "Room dimensions Lx,Ly,Lz in m");
  sim->add_option("--source", source_s, "Source position x,y,z in m")
      ->required();
  sim->add_option("--grid", grid_s, "Receiver lattice nx,ny,spacing,z")
      ->required();
  sim->add_option("--out", out_dir, "Output grid directory")->required();
  sim->add_option("--order", sh_order, "Ambisonic order");
  sim->add_option("--reflections", max_order, "Maximum reflection order");
  sim->add_option("--absorption", absorption, "Uniform wall absorption");
  sim->add_option("--tail-t60", tail_t60, "Diffuse tail T60 in s (0 = off)");

  auto* enh = app.add_subcommand("enhance",
                                 "Directional upmix of a first-order grid");
  enh->add_option("--manifest", manifest, "Grid manifest JSON")->required();
  enh->add_option("--out", out_dir, "Output grid directory")->required();

  auto* loc = app.add_subcommand("localize",
                                 "Source and sound-event localization");
  loc->add_option("--manifest", manifest, "Grid manifest JSON")->required();

  auto* pre = app.add_subcommand("precompute", "Fine-mesh grid precompute");
  pre->add_option("--manifest", manifest, "Grid manifest JSON")->required();
  pre->add_option("--out", out_dir, "Output grid directory")->required();

  auto* interp = app.add_subcommand("interpolate",
                                    "Synthesize an ARIR at a listener pose");
  interp->add_option("--manifest", manifest, "Grid manifest JSON")->required();
  interp->add_option("--pose", pose_s,
                     "x,y,z[,yaw,pitch,roll] (m, degrees)")
      ->required();
  interp->add_option("--out", out_path, "Output WAV")->required();

  auto* ren = app.add_subcommand("render",
                                 "Convolve a signal along a trajectory");
  ren->add_option("--manifest", manifest, "Grid manifest JSON")->required();
  ren->add_option("--trajectory", traj_path, "Trajectory JSON")->required();
  ren->add_option("--input", in_path, "Single-channel input WAV")->required();
  ren->add_option("--out", out_path, "Output WAV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const arir::ToolConfig cfg = make_config(config_path);
    if (dump_config) {
      std::cout << arir::config_to_json(cfg).dump(2) << "\n";
      return 0;
    }
    if (sim->parsed())
      return cmd_simulate(room_s, source_s, grid_s, out_dir, sh_order,
                          max_order, absorption, tail_t60);
    if (enh->parsed()) return cmd_enhance(manifest, out_dir, cfg);
    if (loc->parsed()) return cmd_localize(manifest, cfg);
    if (pre->parsed()) return cmd_precompute(manifest, out_dir, cfg);
    if (interp->parsed())
      return cmd_interpolate(manifest, pose_s, out_path, cfg);
    if (ren->parsed())
      return cmd_render(manifest, traj_path, in_path, out_path, cfg);
    std::cout << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
