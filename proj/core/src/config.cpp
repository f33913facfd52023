#include "groundsel/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "groundsel/error.hpp"

namespace groundsel {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ContractError(where + ": expected an integer, got '" + v + "'");
  }
  return static_cast<int64_t>(x);
}

uint64_t parse_uint(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || v.front() == '-') {
    throw ContractError(where + ": expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<uint64_t>(x);
}

double parse_double(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ContractError(where + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::vector<int64_t> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int64_t> out;
  if (trim(v).empty()) return out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item), where));
  return out;
}

struct KeyDoc {
  const char* key;
  const char* def;
  const char* meaning;
};

// One row per accepted key; describe_config_keys() renders this table and the
// parser dispatch below must stay in sync with it (checked by tests).
constexpr KeyDoc kKeyDocs[] = {
    {"sa1_points", "2048", "points kept by the first set-abstraction stage"},
    {"sa2_points", "1024", "seed count M from the second stage"},
    {"neighbors", "8", "neighbors gathered per set-abstraction center"},
    {"sa_hidden", "64", "hidden width inside the set-abstraction MLPs"},
    {"feature_dim", "64", "point feature width C"},
    {"word_dim", "64", "word feature width H"},
    {"heads", "4", "attention heads in every attention block"},
    {"ffn_width", "128", "feed-forward width inside refinement layers"},
    {"k_o", "1024", "object-confident candidates kept by the first filter step"},
    {"k0", "512", "keypoint budget K_0 after the relevance step"},
    {"score_hidden", "64", "hidden width of the two keypoint score MLPs"},
    {"tpm_layers", "4", "refinement layers T"},
    {"selection_ratio", "0.5", "keypoints kept per refinement layer (ceil)"},
    {"head_hidden", "64", "hidden width of the prediction heads"},
    {"init_seed", "1", "parameter initialization stream"},
    {"alpha_vg", "0.1", "grounding loss weight"},
    {"alpha_dks", "0.8", "keypoint-score loss weight"},
    {"alpha_det", "5.0", "detection loss weight"},
    {"alpha_lang", "0.1", "language loss weight"},
    {"k1", "4", "grounding positives: top-k1 by IoU"},
    {"iou_threshold", "0.25", "grounding positives must exceed this IoU"},
    {"k2", "5", "per-object closest-seed count for object-score labels"},
    {"focal_gamma", "2.0", "focal loss exponent"},
    {"focal_alpha", "0.25", "focal loss positive-class weight"},
    {"epochs", "8", "training epochs"},
    {"batch_size", "4", "scenes accumulated per optimizer step"},
    {"lr", "0.001", "learning rate outside the refinement stack"},
    {"tpm_lr", "0.0001", "learning rate for parameters under 'tpm.'"},
    {"decay_epochs", "4,6", "decay the learning rates after these epochs"},
    {"decay_factor", "0.1", "learning-rate decay multiplier"},
    {"momentum", "0.9", "gradient descent momentum"},
    {"clip_norm", "5.0", "global gradient-norm clip"},
    {"train_seed", "7", "epoch shuffling stream"},
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig rc;
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"sa1_points", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.sa1_points = parse_int(v, w); }},
      {"sa2_points", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.sa2_points = parse_int(v, w); }},
      {"neighbors", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.neighbors = parse_int(v, w); }},
      {"sa_hidden", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.sa_hidden = parse_int(v, w); }},
      {"feature_dim", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.feature_dim = parse_int(v, w); }},
      {"word_dim", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.word_dim = parse_int(v, w); }},
      {"heads", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.heads = parse_int(v, w); }},
      {"ffn_width", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.ffn_width = parse_int(v, w); }},
      {"k_o", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.k_o = parse_int(v, w); }},
      {"k0", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.k0 = parse_int(v, w); }},
      {"score_hidden", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.score_hidden = parse_int(v, w); }},
      {"tpm_layers", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.tpm_layers = parse_int(v, w); }},
      {"selection_ratio", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.selection_ratio = parse_double(v, w); }},
      {"head_hidden", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.head_hidden = parse_int(v, w); }},
      {"init_seed", [](RunConfig& c, const std::string& v, const std::string& w) { c.model.init_seed = parse_uint(v, w); }},
      {"alpha_vg", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.alpha_vg = parse_double(v, w); }},
      {"alpha_dks", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.alpha_dks = parse_double(v, w); }},
      {"alpha_det", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.alpha_det = parse_double(v, w); }},
      {"alpha_lang", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.alpha_lang = parse_double(v, w); }},
      {"k1", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.k1 = parse_int(v, w); }},
      {"iou_threshold", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.iou_threshold = parse_double(v, w); }},
      {"k2", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.k2 = parse_int(v, w); }},
      {"focal_gamma", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.focal_gamma = parse_double(v, w); }},
      {"focal_alpha", [](RunConfig& c, const std::string& v, const std::string& w) { c.loss.focal_alpha = parse_double(v, w); }},
      {"epochs", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.epochs = parse_int(v, w); }},
      {"batch_size", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.batch_size = parse_int(v, w); }},
      {"lr", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.lr = parse_double(v, w); }},
      {"tpm_lr", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.tpm_lr = parse_double(v, w); }},
      {"decay_epochs", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.decay_epochs = parse_int_list(v, w); }},
      {"decay_factor", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.decay_factor = parse_double(v, w); }},
      {"momentum", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.momentum = parse_double(v, w); }},
      {"clip_norm", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.clip_norm = parse_double(v, w); }},
      {"train_seed", [](RunConfig& c, const std::string& v, const std::string& w) { c.train.seed = parse_uint(v, w); }},
  };

  std::istringstream ss(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError(where + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ContractError(where + ": unknown config key '" + key + "'");
    }
    it->second(rc, value, where + " (" + key + ")");
  }
  return rc;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string describe_config_keys() {
  std::ostringstream out;
  for (const KeyDoc& d : kKeyDocs) {
    out << d.key << " = " << d.def << "  # " << d.meaning << "\n";
  }
  return out.str();
}

}  // namespace groundsel
