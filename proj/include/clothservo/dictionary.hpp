#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "clothservo/clothsim.hpp"
#include "clothservo/features.hpp"
#include "clothservo/kmeans.hpp"
#include "clothservo/perception.hpp"
#include "clothservo/recording.hpp"

namespace clothservo {

/// A feature-space velocity paired with the gripper velocity that produced it.
/// Both are per-second rates.
struct FeedbackWord {
  Eigen::VectorXd ds;
  Eigen::VectorXd dr;

  bool operator==(const FeedbackWord& o) const { return ds == o.ds && dr == o.dr; }
};

/// A recording with its per-frame features already extracted.
struct FeatureTrack {
  std::vector<FeatureVector> features;
  std::vector<GripperConfig> configs;
  double frame_rate = 30.0;

  std::size_t size() const { return features.size(); }
};

/// Extracts features for every frame of a recording (images loaded from disk).
FeatureTrack extract_track(const Recording& rec, const FeatureSpec& spec);

/// Draws `n` index pairs uniformly with replacement; a pair with equal indices is redrawn.
std::vector<std::pair<std::size_t, std::size_t>> sample_index_pairs(std::size_t frame_count,
                                                                    std::size_t n, std::uint64_t seed);

/// The feedback word of frames (a, b): both differences divided by the signed
/// elapsed time (a - b) / frame_rate.
FeedbackWord make_word(const FeatureTrack& track, std::size_t a, std::size_t b);

/// Markov pair sampling: `n` words from random, order-free frame pairs.
std::vector<FeedbackWord> sample_pairs(const FeatureTrack& track, std::size_t n, std::uint64_t seed);

struct FeedbackDictionary {
  std::vector<FeedbackWord> words;
  FeatureSpec spec;
  int n_dof = 0;
  double frame_rate = 30.0;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;

  std::string layout_id() const { return spec.layout_id(); }
  std::size_t size() const { return words.size(); }
  /// Columns are the words' ds / dr.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::MatrixXd velocity_matrix() const;

  /// Words share one feature length and DOF count, at least one word, finite values.
  void validate() const;
  bool operator==(const FeedbackDictionary&) const = default;
};

struct BuildDiagnostics {
  KMeansResult clustering;
  std::vector<std::size_t> selected;  ///< word index chosen for each center
};

/// Clusters the words' ds with k-means (k = n_dic) and keeps, for every center,
/// the word nearest to it. Centers are not stored.
FeedbackDictionary build_dictionary(const std::vector<FeedbackWord>& words, int n_dic,
                                    std::uint64_t seed, const FeatureSpec& spec,
                                    BuildDiagnostics* diagnostics = nullptr);

/// Text container: header with version, feature spec, metadata, one line per
/// word, FNV-1a checksum of all preceding bytes. Numbers round-trip exactly.
void save_dictionary(const FeedbackDictionary& dict, const std::filesystem::path& path);
FeedbackDictionary load_dictionary(const std::filesystem::path& path);

std::string serialize_dictionary(const FeedbackDictionary& dict);
FeedbackDictionary parse_dictionary(const std::string& text);

inline constexpr int kDictionaryFormatVersion = 1;

}  // namespace clothservo
