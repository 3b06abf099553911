#include "clothservo/recording.hpp"

#include <fstream>
#include <json.hpp>

#include "clothservo/errors.hpp"

namespace clothservo {

void Recording::validate() const {
  if (frames.size() < 2) throw InsufficientData("a recording needs at least 2 frames");
  if (!(frame_rate > 0.0)) throw ParameterError("recording frame rate must be > 0");
  const auto dof = frames.front().r.dof();
  for (const auto& f : frames)
    if (f.r.dof() != dof) throw ContractError("recording frames disagree on the number of DOF");
}

void write_recording_log(const Recording& rec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write recording log " + path.string());
  for (const auto& f : rec.frames) {
    nlohmann::json j;
    j["step"] = f.step;
    j["fps"] = rec.frame_rate;
    j["r"] = std::vector<double>(f.r.r.data(), f.r.r.data() + f.r.r.size());
    j["image"] = f.image;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("failed writing recording log " + path.string());
}

Recording read_recording_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open recording log " + path.string());
  Recording rec;
  rec.id = path.filename().string();
  rec.base_dir = path.parent_path();
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RecordingFrame f;
      f.step = j.at("step").get<long>();
      const auto r = j.at("r").get<std::vector<double>>();
      f.r = GripperConfig(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
      f.image = j.at("image").get<std::string>();
      rec.frame_rate = j.at("fps").get<double>();
      rec.frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(std::string("bad recording record: ") + e.what(), "line " + std::to_string(lineno));
    }
  }
  return rec;
}

}  // namespace clothservo
