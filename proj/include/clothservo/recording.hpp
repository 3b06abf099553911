#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clothservo/clothsim.hpp"

namespace clothservo {

/// One control frame of a recorded manipulation: the commanded gripper
/// configuration and the camera image, stored as a PNG path relative to the log.
struct RecordingFrame {
  long step = 0;
  GripperConfig r;
  std::string image;
};

struct Recording {
  std::vector<RecordingFrame> frames;
  double frame_rate = 30.0;
  std::string id;
  std::filesystem::path base_dir;  ///< directory image paths are relative to

  /// >= 2 frames, consistent DOF count, positive frame rate.
  void validate() const;
  std::filesystem::path image_path(std::size_t i) const { return base_dir / frames[i].image; }
};

/// Line-delimited JSON, one object per frame:
/// {"step":0,"fps":30,"r":[...],"image":"frames/000000.png"}
void write_recording_log(const Recording& rec, const std::filesystem::path& path);
Recording read_recording_log(const std::filesystem::path& path);

}  // namespace clothservo
