#include "clothservo/dictionary.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "clothservo/errors.hpp"
#include "clothservo/image.hpp"
#include "clothservo/textio.hpp"

namespace clothservo {

FeatureTrack extract_track(const Recording& rec, const FeatureSpec& spec) {
  rec.validate();
  FeatureTrack track;
  track.frame_rate = rec.frame_rate;
  track.features.reserve(rec.frames.size());
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    track.features.push_back(extract_features(load_png(rec.image_path(i)), spec));
    track.configs.push_back(rec.frames[i].r);
  }
  return track;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_index_pairs(std::size_t frame_count,
                                                                    std::size_t n, std::uint64_t seed) {
  if (frame_count < 2) throw InsufficientData("pair sampling needs at least 2 distinct frames");
  if (n < 1) throw ParameterError("sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, frame_count - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n);
  while (pairs.size() < n) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (a != b) pairs.emplace_back(a, b);
  }
  return pairs;
}

FeedbackWord make_word(const FeatureTrack& track, std::size_t a, std::size_t b) {
  if (a == b) throw ParameterError("a feedback word needs two different frames");
  const double elapsed = (static_cast<double>(a) - static_cast<double>(b)) / track.frame_rate;
  const FeatureVector ds = track.features[a] - track.features[b];
  return {ds.values / elapsed, (track.configs[a].r - track.configs[b].r) / elapsed};
}

std::vector<FeedbackWord> sample_pairs(const FeatureTrack& track, std::size_t n, std::uint64_t seed) {
  if (track.features.size() != track.configs.size())
    throw ContractError("feature track has mismatched features and configurations");
  if (!(track.frame_rate > 0.0)) throw ParameterError("frame rate must be > 0");
  std::vector<FeedbackWord> words;
  words.reserve(n);
  for (const auto& [a, b] : sample_index_pairs(track.size(), n, seed)) words.push_back(make_word(track, a, b));
  return words;
}

Eigen::MatrixXd FeedbackDictionary::feature_matrix() const {
  if (words.empty()) return {};
  Eigen::MatrixXd m(words.front().ds.size(), static_cast<Eigen::Index>(words.size()));
  for (std::size_t i = 0; i < words.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = words[i].ds;
  return m;
}

Eigen::MatrixXd FeedbackDictionary::velocity_matrix() const {
  if (words.empty()) return {};
  Eigen::MatrixXd m(words.front().dr.size(), static_cast<Eigen::Index>(words.size()));
  for (std::size_t i = 0; i < words.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = words[i].dr;
  return m;
}

void FeedbackDictionary::validate() const {
  if (words.empty()) throw ContractError("dictionary has no words");
  const auto len = static_cast<Eigen::Index>(spec.feature_length());
  for (const auto& w : words) {
    if (w.ds.size() != len) throw LayoutMismatch("dictionary word has the wrong feature length");
    if (w.dr.size() != n_dof) throw ContractError("dictionary word has the wrong number of DOF");
    if (!w.ds.allFinite() || !w.dr.allFinite()) throw ContractError("dictionary word is not finite");
  }
}

FeedbackDictionary build_dictionary(const std::vector<FeedbackWord>& words, int n_dic,
                                    std::uint64_t seed, const FeatureSpec& spec,
                                    BuildDiagnostics* diagnostics) {
  if (n_dic < 1) throw ParameterError("dictionary size must be >= 1");
  if (static_cast<std::size_t>(n_dic) > words.size())
    throw ParameterError("dictionary size exceeds the number of sampled words");

  FeedbackDictionary dict;
  dict.spec = spec;
  dict.seed = seed;
  dict.n_dof = static_cast<int>(words.front().dr.size());

  Eigen::MatrixXd ds(words.front().ds.size(), static_cast<Eigen::Index>(words.size()));
  for (std::size_t i = 0; i < words.size(); ++i) ds.col(static_cast<Eigen::Index>(i)) = words[i].ds;

  KMeansResult km = kmeans(ds, n_dic, seed);
  std::vector<std::size_t> selected;
  for (int c = 0; c < n_dic; ++c) {
    const auto j = static_cast<std::size_t>(nearest_column(ds, km.centers.col(c)));
    selected.push_back(j);
    dict.words.push_back(words[j]);
  }
  if (diagnostics) {
    diagnostics->clustering = std::move(km);
    diagnostics->selected = std::move(selected);
  }
  return dict;
}

namespace {

constexpr const char* kMagic = "clothservo-dictionary";

std::string join_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

Eigen::VectorXd parse_vec(std::string_view text, Eigen::Index expected, const std::string& field) {
  const auto tok = split_ws(text);
  if (static_cast<Eigen::Index>(tok.size()) != expected)
    throw LoadError("expected " + std::to_string(expected) + " values, found " + std::to_string(tok.size()), field);
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v[i] = parse_double(tok[static_cast<std::size_t>(i)], field);
  return v;
}

}  // namespace

std::string serialize_dictionary(const FeedbackDictionary& dict) {
  dict.validate();
  std::ostringstream os;
  os << kMagic << " v" << kDictionaryFormatVersion << '\n';
  os << "[feature]\n";
  for (const auto& [k, v] : dict.spec.to_entries()) os << k << " = " << v << '\n';
  os << "[meta]\n";
  os << "layout_id = " << dict.layout_id() << '\n';
  os << "frame_rate = " << format_double(dict.frame_rate) << '\n';
  os << "n_dof = " << dict.n_dof << '\n';
  os << "feature_length = " << dict.spec.feature_length() << '\n';
  os << "n_words = " << dict.words.size() << '\n';
  os << "seed = " << dict.seed << '\n';
  std::string sources;
  for (const auto& s : dict.sources) sources += (sources.empty() ? "" : ";") + s;
  os << "sources = " << sources << '\n';
  os << "[words]\n";
  for (const auto& w : dict.words) os << join_vec(w.ds) << " | " << join_vec(w.dr) << '\n';
  std::string body = os.str();
  body += "checksum = " + hex64(fnv1a64(body)) + "\n";
  return body;
}

FeedbackDictionary parse_dictionary(const std::string& text) {
  const auto cs_pos = text.rfind("checksum = ");
  if (cs_pos == std::string::npos || (cs_pos > 0 && text[cs_pos - 1] != '\n'))
    throw LoadError("dictionary file is truncated", "checksum");
  const std::string body = text.substr(0, cs_pos);
  const auto stored = parse_hex64(trim(std::string_view(text).substr(cs_pos + 11)), "checksum");

  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty dictionary file", "header");
  {
    const auto tok = split_ws(line);
    if (tok.size() != 2 || tok[0] != kMagic) throw LoadError("not a dictionary file", "header");
    if (tok[1] != "v" + std::to_string(kDictionaryFormatVersion))
      throw LoadError("unsupported dictionary version '" + std::string(tok[1]) + "'", "version");
  }
  if (fnv1a64(body) != stored) throw LoadError("checksum mismatch; file is corrupt", "checksum");

  std::map<std::string, std::string> feature, meta;
  std::vector<std::string> word_lines;
  std::string section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line;
      continue;
    }
    if (section == "[words]") {
      word_lines.push_back(line);
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw LoadError("malformed line '" + line + "'", section);
    auto& target = section == "[feature]" ? feature : meta;
    target[line.substr(0, eq)] = line.substr(eq + 3);
  }

  FeedbackDictionary dict;
  dict.spec = FeatureSpec::from_entries(feature);
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) throw LoadError("missing entry", k);
    return it->second;
  };
  dict.frame_rate = parse_double(need("frame_rate"), "frame_rate");
  dict.n_dof = static_cast<int>(parse_int(need("n_dof"), "n_dof"));
  dict.seed = parse_uint64(need("seed"), "seed");
  const auto flen = parse_int(need("feature_length"), "feature_length");
  const auto nwords = parse_int(need("n_words"), "n_words");
  if (flen != static_cast<long long>(dict.spec.feature_length()))
    throw LoadError("feature length disagrees with the feature spec", "feature_length");
  if (need("layout_id") != dict.layout_id()) throw LoadError("layout id disagrees with the feature spec", "layout_id");
  if (nwords != static_cast<long long>(word_lines.size()))
    throw LoadError("word count disagrees with the stored words", "n_words");
  const std::string& src = need("sources");
  std::size_t start = 0;
  while (start < src.size()) {
    const auto end = src.find(';', start);
    dict.sources.push_back(src.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  for (std::size_t i = 0; i < word_lines.size(); ++i) {
    const std::string field = "word " + std::to_string(i);
    const auto bar = word_lines[i].find(" | ");
    if (bar == std::string::npos) throw LoadError("word line lacks a separator", field);
    FeedbackWord w;
    w.ds = parse_vec(std::string_view(word_lines[i]).substr(0, bar), flen, field);
    w.dr = parse_vec(std::string_view(word_lines[i]).substr(bar + 3), dict.n_dof, field);
    dict.words.push_back(std::move(w));
  }
  try {
    dict.validate();
  } catch (const Error& e) {
    throw LoadError(e.what(), "words");
  }
  return dict;
}

void save_dictionary(const FeedbackDictionary& dict, const std::filesystem::path& path) {
  const std::string text = serialize_dictionary(dict);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dictionary " + path.string());
  out << text;
  if (!out) throw Error("failed writing dictionary " + path.string());
}

FeedbackDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open dictionary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dictionary(ss.str());
}

}  // namespace clothservo
