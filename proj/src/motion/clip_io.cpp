#include "tracklab/motion/clip_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tracklab {

namespace {
using nlohmann::json;

[[noreturn]] void load_error(const std::string& path, const std::string& what) {
  throw std::runtime_error("failed to load clip '" + path + "': " + what);
}
}  // namespace

MotionClip load_clip(const std::string& path, const RobotModel& model) {
  std::ifstream in(path);
  if (!in) load_error(path, "cannot open file");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    load_error(path, e.what());
  }

  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    load_error(path, "missing integer 'version'");
  }
  if (doc["version"].get<int>() != 1) {
    load_error(path, "unsupported version " + doc["version"].dump());
  }
  if (!doc.contains("dt") || !doc["dt"].is_number()) load_error(path, "missing 'dt'");
  if (!doc.contains("joint_names")) load_error(path, "missing 'joint_names'");
  const auto& names = doc["joint_names"];
  if (!names.is_array() || names.size() != kNumJoints) {
    load_error(path, "'joint_names' must list 10 joints");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    if (names[j].get<std::string>() != RobotModel::joint_names()[j]) {
      load_error(path, "joint_names[" + std::to_string(j) + "] must be '" +
                           RobotModel::joint_names()[j] + "'");
    }
  }
  if (!doc.contains("frames") || !doc["frames"].is_array()) {
    load_error(path, "missing 'frames' array");
  }

  MotionClip clip;
  clip.dt = doc["dt"].get<double>();
  clip.name = std::filesystem::path(path).stem().string();
  clip.frames.reserve(doc["frames"].size());
  int idx = 0;
  for (const auto& fr : doc["frames"]) {
    auto frame_error = [&](const std::string& what) {
      load_error(path, "frame " + std::to_string(idx) + ": " + what);
    };
    if (!fr.contains("root_pos") || fr["root_pos"].size() != 2) frame_error("bad root_pos");
    if (!fr.contains("root_rot") || fr["root_rot"].size() != 2) frame_error("bad root_rot");
    if (!fr.contains("q") || fr["q"].size() != kNumJoints) {
      frame_error("q must have 10 entries");
    }
    MotionFrame f;
    f.root_pos = {fr["root_pos"][0].get<double>(), fr["root_pos"][1].get<double>()};
    f.root_rot = {fr["root_rot"][0].get<double>(), fr["root_rot"][1].get<double>()};
    if (!f.root_rot.is_unit()) frame_error("root_rot not unit norm");
    for (int j = 0; j < kNumJoints; ++j) f.q[j] = fr["q"][j].get<double>();
    clip.frames.push_back(f);
    ++idx;
  }
  if (clip.num_frames() < 2) load_error(path, "needs at least 2 frames");

  clip.derive(model);
  return clip;
}

void save_clip(const MotionClip& clip, const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["dt"] = clip.dt;
  doc["joint_names"] = RobotModel::joint_names();
  json frames = json::array();
  for (const auto& f : clip.frames) {
    json fr;
    fr["root_pos"] = {f.root_pos.x, f.root_pos.z};
    fr["root_rot"] = {f.root_rot.c, f.root_rot.s};
    fr["q"] = f.q;
    frames.push_back(std::move(fr));
  }
  doc["frames"] = std::move(frames);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write clip file '" + path + "'");
  out << doc.dump(1) << "\n";
}

std::vector<MotionClip> load_clip_dir(const std::string& dir, const RobotModel& model) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("clip directory '" + dir + "' does not exist");
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<MotionClip> clips;
  clips.reserve(paths.size());
  for (const auto& p : paths) clips.push_back(load_clip(p, model));
  return clips;
}

}  // namespace tracklab
