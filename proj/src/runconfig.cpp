#include "pjem/runconfig.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pjem {

namespace {

using nlohmann::json;

[[noreturn]] void reject(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: " + key + " " + what);
}

int as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) reject(key, "must be an integer");
  return v.get<int>();
}

std::uint64_t as_seed(const std::string& key, const json& v) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.is_number() && v.get<double>() < 0)) {
    reject(key, "must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) reject(key, "must be a number");
  return v.get<double>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) reject(key, "must be a boolean");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) reject(key, "must be a string");
  return v.get<std::string>();
}

int positive_int(const std::string& key, const json& v, int minimum = 1) {
  int x = as_int(key, v);
  if (x < minimum) reject(key, "must be >= " + std::to_string(minimum));
  return x;
}

double bounded(const std::string& key, const json& v, double lo, bool lo_open, double hi, bool hi_open) {
  double x = as_double(key, v);
  bool low_ok = lo_open ? x > lo : x >= lo;
  bool high_ok = hi_open ? x < hi : x <= hi;
  if (!low_ok || !high_ok) reject(key, "out of range");
  return x;
}

double non_negative(const std::string& key, const json& v) {
  double x = as_double(key, v);
  if (x < 0.0) reject(key, "must be >= 0");
  return x;
}

bool apply_aug_key(AugmentationConfig& aug, const std::string& prefix, const std::string& key, const json& v) {
  std::string field = key.substr(prefix.size());
  if (field == "rotation_mode") {
    std::string mode = as_string(key, v);
    if (mode == "z") aug.rotation_mode = AugmentationConfig::RotationMode::kZAxis;
    else if (mode == "full3d") aug.rotation_mode = AugmentationConfig::RotationMode::kFull3d;
    else reject(key, "must be \"z\" or \"full3d\"");
  } else if (field == "rotation_max_angle") {
    aug.rotation_max_angle = non_negative(key, v);
  } else if (field == "translation") {
    aug.translation = non_negative(key, v);
  } else if (field == "scale_min") {
    aug.scale_min = bounded(key, v, 0.0, true, 1e9, false);
  } else if (field == "scale_max") {
    aug.scale_max = bounded(key, v, 0.0, true, 1e9, false);
  } else if (field == "jitter_sigma") {
    aug.jitter_sigma = non_negative(key, v);
  } else if (field == "jitter_clip") {
    aug.jitter_clip = non_negative(key, v);
  } else if (field == "cutout_enable") {
    aug.cutout_enable = as_bool(key, v);
  } else if (field == "cutout_radius") {
    aug.cutout_radius = non_negative(key, v);
  } else {
    return false;
  }
  return true;
}

void apply_key(RunConfig& cfg, const std::string& key, const json& v) {
  if (key == "train.batch_size") cfg.train.batch_size = positive_int(key, v, 2);
  else if (key == "train.epochs") cfg.train.epochs = positive_int(key, v, 1);
  else if (key == "train.lr0") cfg.train.lr0 = bounded(key, v, 0.0, true, 1e9, false);
  else if (key == "train.weight_decay") cfg.train.weight_decay = non_negative(key, v);
  else if (key == "train.seed") cfg.train.seed = as_seed(key, v);
  else if (key == "loss.lambda_ti") cfg.train.loss.lambda_ti = non_negative(key, v);
  else if (key == "loss.use_jed") cfg.train.loss.use_jed = as_bool(key, v);
  else if (key == "loss.use_jeo") cfg.train.loss.use_jeo = as_bool(key, v);
  else if (key == "layout.K") cfg.layout.segments = positive_int(key, v, 2);
  else if (key == "layout.M") cfg.layout.entries_per_segment = positive_int(key, v, 2);
  else if (key == "encoder.widths") {
    if (!v.is_array() || v.empty()) reject(key, "must be a non-empty array of positive integers");
    std::vector<int> widths;
    for (const json& w : v) widths.push_back(positive_int(key, w, 1));
    cfg.encoder.widths = std::move(widths);
  } else if (key == "proj.hidden") cfg.projector.hidden = positive_int(key, v, 1);
  else if (key == "proj.depth") cfg.projector.depth = positive_int(key, v, 1);
  else if (key == "diag.collapse_threshold") cfg.train.collapse_threshold = bounded(key, v, 0.0, true, 1.0, true);
  else if (key == "probe.mode") {
    std::string mode = as_string(key, v);
    if (mode == "linear") cfg.probe.mode = ProbeConfig::Mode::kLinear;
    else if (mode == "knn") cfg.probe.mode = ProbeConfig::Mode::kKnn;
    else reject(key, "must be \"linear\" or \"knn\"");
  } else if (key == "probe.label_fraction") cfg.probe.label_fraction = bounded(key, v, 0.0, true, 1.0, false);
  else if (key == "probe.epochs") cfg.probe.epochs = positive_int(key, v, 1);
  else if (key == "probe.lr") cfg.probe.lr = bounded(key, v, 0.0, true, 1e9, false);
  else if (key == "probe.k") cfg.probe.k = positive_int(key, v, 1);
  else if (key == "probe.seed") cfg.probe.seed = as_seed(key, v);
  else if (key.starts_with("aug.") && apply_aug_key(cfg.train.aug_branch1, "aug.", key, v)) {}
  else if (key.starts_with("aug2.") && apply_aug_key(cfg.train.aug_branch2, "aug2.", key, v)) {}
  else reject(key, "is not a recognized key");
}

void echo_aug(json& doc, const std::string& prefix, const AugmentationConfig& aug) {
  doc[prefix + "rotation_mode"] = aug.rotation_mode == AugmentationConfig::RotationMode::kZAxis ? "z" : "full3d";
  doc[prefix + "rotation_max_angle"] = aug.rotation_max_angle;
  doc[prefix + "translation"] = aug.translation;
  doc[prefix + "scale_min"] = aug.scale_min;
  doc[prefix + "scale_max"] = aug.scale_max;
  doc[prefix + "jitter_sigma"] = aug.jitter_sigma;
  doc[prefix + "jitter_clip"] = aug.jitter_clip;
  doc[prefix + "cutout_enable"] = aug.cutout_enable;
  doc[prefix + "cutout_radius"] = aug.cutout_radius;
}

}  // namespace

std::string RunConfig::to_json() const {
  json doc;  // nlohmann objects keep keys sorted
  doc["train.batch_size"] = train.batch_size;
  doc["train.epochs"] = train.epochs;
  doc["train.lr0"] = train.lr0;
  doc["train.weight_decay"] = train.weight_decay;
  doc["train.seed"] = train.seed;
  doc["loss.lambda_ti"] = train.loss.lambda_ti;
  doc["loss.use_jed"] = train.loss.use_jed;
  doc["loss.use_jeo"] = train.loss.use_jeo;
  doc["layout.K"] = layout.segments;
  doc["layout.M"] = layout.entries_per_segment;
  doc["encoder.widths"] = encoder.widths;
  doc["proj.hidden"] = projector.hidden;
  doc["proj.depth"] = projector.depth;
  doc["diag.collapse_threshold"] = train.collapse_threshold;
  doc["probe.mode"] = probe.mode == ProbeConfig::Mode::kLinear ? "linear" : "knn";
  doc["probe.label_fraction"] = probe.label_fraction;
  doc["probe.epochs"] = probe.epochs;
  doc["probe.lr"] = probe.lr;
  doc["probe.k"] = probe.k;
  doc["probe.seed"] = probe.seed;
  echo_aug(doc, "aug.", train.aug_branch1);
  echo_aug(doc, "aug2.", train.aug_branch2);
  return doc.dump();
}

void RunConfig::validate() const {
  train.validate();
  encoder.validate();
  layout.validate();
  projector.validate();
  probe.validate();
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  RunConfig cfg;

  bool blank = true;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      blank = false;
      break;
    }
  }
  if (!blank) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("config: file is not valid JSON");
    if (!doc.is_object()) throw std::invalid_argument("config: top level must be a JSON object of flat keys");
    for (const auto& [key, value] : doc.items()) apply_key(cfg, key, value);
  }

  for (const std::string& entry : overrides) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("config: override '" + entry + "' is not KEY=VALUE");
    }
    std::string key = entry.substr(0, eq);
    std::string raw = entry.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
      if (raw.find(',') != std::string::npos) {
        // comma list of numbers, e.g. encoder.widths=64,128,256
        value = json::array();
        std::istringstream parts(raw);
        std::string part;
        while (std::getline(parts, part, ',')) {
          json item = json::parse(part, nullptr, false);
          if (item.is_discarded()) {
            value = json(raw);
            break;
          }
          value.push_back(item);
        }
      } else {
        value = json(raw);  // bare string
      }
    }
    apply_key(cfg, key, value);
  }

  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::string text;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("config: cannot open " + file.string());
    text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return parse_config_text(text, overrides);
}

}  // namespace pjem
