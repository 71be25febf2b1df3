#include "contrailseg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "contrailseg/errors.hpp"

using json = nlohmann::json;

namespace contrailseg {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError("config." + path + " " + what);
}

class Section {
 public:
  Section(json& node, std::string path) : node_(node), path_(std::move(path)) {}

  ~Section() = default;

  void take(const char* key, int& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_number_integer()) bad(at(key), "must be an integer");
    out = v.get<int>();
  }
  void take(const char* key, float& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_number()) bad(at(key), "must be a number");
    out = v.get<float>();
  }
  void take(const char* key, double& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_number()) bad(at(key), "must be a number");
    out = v.get<double>();
  }
  void take(const char* key, bool& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_boolean()) bad(at(key), "must be a boolean");
    out = v.get<bool>();
  }
  void take(const char* key, std::string& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_string()) bad(at(key), "must be a string");
    out = v.get<std::string>();
  }
  void take(const char* key, uint64_t& out) {
    json v;
    if (!pop(key, v)) return;
    if (!v.is_number_unsigned() && !v.is_number_integer()) bad(at(key), "must be an integer");
    if (v.is_number_integer() && v.get<int64_t>() < 0) bad(at(key), "must be >= 0");
    out = v.get<uint64_t>();
  }
  bool pop_node(const char* key, json& out) { return pop(key, out); }

  // Every key must have been consumed by now.
  void finish() {
    if (!node_.is_object()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it)
      throw ConfigError("unknown config key '" + at(it.key().c_str()) + "'");
  }

  std::string at(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

 private:
  bool pop(const char* key, json& out) {
    if (!node_.is_object()) bad(path_, "must be an object");
    auto it = node_.find(key);
    if (it == node_.end()) return false;
    out = std::move(*it);
    node_.erase(it);
    return true;
  }

  json& node_;
  std::string path_;
};

void parse_scene(json& node, const std::string& path, SceneConfig& sc) {
  Section s(node, path);
  std::string preset;
  s.take("preset", preset);
  if (!preset.empty()) apply_preset(sc, preset);
  s.take("height", sc.height);
  s.take("width", sc.width);
  s.take("frames", sc.frames);
  s.take("annotators", sc.annotators);
  s.take("num_samples", sc.num_samples);
  s.take("min_contrails", sc.min_contrails);
  s.take("max_contrails", sc.max_contrails);
  s.take("min_width", sc.min_width);
  s.take("max_width", sc.max_width);
  s.take("min_length", sc.min_length);
  s.take("max_length", sc.max_length);
  s.take("drift", sc.drift);
  s.take("jitter_sigma", sc.jitter_sigma);
  s.take("miss_prob", sc.miss_prob);
  s.take("background", sc.background);
  s.take("noise_sigma", sc.noise_sigma);
  s.take("streak_gain", sc.streak_gain);
  std::string conv;
  s.take("convention", conv);
  if (!conv.empty()) sc.convention = convention_from_string(conv);
  s.finish();
}

void parse_network(json& node, const std::string& path, NetworkSpec& net) {
  Section s(node, path);
  s.take("in_channels", net.in_channels);
  s.take("stem_channels", net.stem_channels);
  s.take("se_reduction", net.se_reduction);
  std::string act;
  s.take("se_activation", act);
  if (!act.empty()) {
    if (act == "relu")
      net.se_activation = SeActivation::relu;
    else if (act == "swish")
      net.se_activation = SeActivation::swish;
    else
      bad(s.at("se_activation"), "must be 'relu' or 'swish', got '" + act + "'");
  }
  s.take("swish_beta_init", net.swish_beta_init);

  json stages;
  if (s.pop_node("stages", stages)) {
    if (!stages.is_array()) bad(s.at("stages"), "must be an array");
    net.stages.clear();
    for (size_t i = 0; i < stages.size(); ++i) {
      std::string sp = s.at("stages") + "[" + std::to_string(i) + "]";
      StageSpec st;
      Section sec(stages[i], sp);
      sec.take("repeats", st.repeats);
      sec.take("channels", st.channels);
      sec.take("stride", st.stride);
      sec.take("expansion", st.expansion);
      sec.take("kernel", st.kernel);
      sec.finish();
      net.stages.push_back(st);
    }
  }

  json scaling;
  if (s.pop_node("scaling", scaling)) {
    Section sec(scaling, s.at("scaling"));
    sec.take("alpha", net.scaling.alpha);
    sec.take("beta", net.scaling.beta);
    sec.take("gamma", net.scaling.gamma);
    sec.take("phi", net.scaling.phi);
    sec.finish();
  }
  s.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": config must be a JSON object");

  RunConfig cfg;
  Section top(root, "");
  std::string format;
  top.take("format", format);
  if (!format.empty() && format != "contrailseg-config-v1")
    throw ConfigError(origin + ": unsupported config format '" + format + "'");
  top.take("seed", cfg.seed);
  top.take("out_dir", cfg.out_dir);
  top.take("data_dir", cfg.data_dir);
  top.take("unlabeled_dir", cfg.unlabeled_dir);
  top.take("eval_dir", cfg.eval_dir);

  json node;
  if (top.pop_node("scene", node)) parse_scene(node, "scene", cfg.scene);
  if (top.pop_node("network", node)) parse_network(node, "network", cfg.network);
  if (top.pop_node("train", node)) {
    Section s(node, "train");
    s.take("epochs", cfg.train.epochs);
    s.take("folds", cfg.train.folds);
    s.take("batch", cfg.train.batch);
    s.take("lr", cfg.train.lr);
    s.take("use_mc", cfg.train.use_mc);
    s.take("use_soft_labels", cfg.train.use_soft_labels);
    s.take("use_pseudo_labels", cfg.train.use_pseudo_labels);
    s.take("augment", cfg.train.augment);
    s.take("threshold", cfg.train.threshold);
    s.finish();
  }
  if (top.pop_node("augment", node)) {
    Section s(node, "augment");
    s.take("ssr_prob", cfg.augment.ssr_prob);
    s.take("shift_limit", cfg.augment.shift_limit);
    s.take("scale_limit", cfg.augment.scale_limit);
    s.take("rotate_limit_deg", cfg.augment.rotate_limit_deg);
    s.take("hflip_prob", cfg.augment.hflip_prob);
    s.finish();
  }
  if (top.pop_node("validity", node)) {
    Section s(node, "validity");
    s.take("min_pixels", cfg.validity.min_pixels);
    s.take("min_aspect", cfg.validity.min_aspect);
    s.take("min_frames", cfg.validity.min_frames);
    s.take("temporal_iou", cfg.validity.temporal_iou);
    s.finish();
  }
  if (top.pop_node("loss", node)) {
    Section s(node, "loss");
    s.take("bce_weight", cfg.loss.bce_weight);
    s.take("dice_weight", cfg.loss.dice_weight);
    s.take("dice_smooth", cfg.loss.dice_smooth);
    s.take("prob_clamp", cfg.loss.prob_clamp);
    s.finish();
  }
  top.finish();

  if (cfg.train.epochs < 1) throw ConfigError("config.train.epochs must be >= 1");
  if (cfg.train.batch < 1) throw ConfigError("config.train.batch must be >= 1");
  if (cfg.train.folds < 2) throw ConfigError("config.train.folds must be >= 2");
  if (!(cfg.train.lr > 0)) throw ConfigError("config.train.lr must be > 0");
  if (cfg.loss.bce_weight < 0 || cfg.loss.dice_weight < 0)
    throw ConfigError("config.loss weights must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string canonical_config_json(const RunConfig& cfg) {
  json j;  // nlohmann objects keep keys sorted, which fixes the byte layout
  j["format"] = "contrailseg-config-v1";
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["data_dir"] = cfg.data_dir;
  j["unlabeled_dir"] = cfg.unlabeled_dir;
  j["eval_dir"] = cfg.eval_dir;

  json scene;
  scene["height"] = cfg.scene.height;
  scene["width"] = cfg.scene.width;
  scene["frames"] = cfg.scene.frames;
  scene["annotators"] = cfg.scene.annotators;
  scene["num_samples"] = cfg.scene.num_samples;
  scene["min_contrails"] = cfg.scene.min_contrails;
  scene["max_contrails"] = cfg.scene.max_contrails;
  scene["min_width"] = cfg.scene.min_width;
  scene["max_width"] = cfg.scene.max_width;
  scene["min_length"] = cfg.scene.min_length;
  scene["max_length"] = cfg.scene.max_length;
  scene["drift"] = cfg.scene.drift;
  scene["jitter_sigma"] = cfg.scene.jitter_sigma;
  scene["miss_prob"] = cfg.scene.miss_prob;
  scene["background"] = cfg.scene.background;
  scene["noise_sigma"] = cfg.scene.noise_sigma;
  scene["streak_gain"] = cfg.scene.streak_gain;
  scene["convention"] = to_string(cfg.scene.convention);
  j["scene"] = std::move(scene);

  json net;
  net["in_channels"] = cfg.network.in_channels;
  net["stem_channels"] = cfg.network.stem_channels;
  net["se_reduction"] = cfg.network.se_reduction;
  net["se_activation"] = cfg.network.se_activation == SeActivation::relu ? "relu" : "swish";
  net["swish_beta_init"] = cfg.network.swish_beta_init;
  json stages = json::array();
  for (const StageSpec& st : cfg.network.stages) {
    json s;
    s["repeats"] = st.repeats;
    s["channels"] = st.channels;
    s["stride"] = st.stride;
    s["expansion"] = st.expansion;
    s["kernel"] = st.kernel;
    stages.push_back(std::move(s));
  }
  net["stages"] = std::move(stages);
  json scaling;
  scaling["alpha"] = cfg.network.scaling.alpha;
  scaling["beta"] = cfg.network.scaling.beta;
  scaling["gamma"] = cfg.network.scaling.gamma;
  scaling["phi"] = cfg.network.scaling.phi;
  net["scaling"] = std::move(scaling);
  j["network"] = std::move(net);

  json train;
  train["epochs"] = cfg.train.epochs;
  train["folds"] = cfg.train.folds;
  train["batch"] = cfg.train.batch;
  train["lr"] = cfg.train.lr;
  train["use_mc"] = cfg.train.use_mc;
  train["use_soft_labels"] = cfg.train.use_soft_labels;
  train["use_pseudo_labels"] = cfg.train.use_pseudo_labels;
  train["augment"] = cfg.train.augment;
  train["threshold"] = cfg.train.threshold;
  j["train"] = std::move(train);

  json aug;
  aug["ssr_prob"] = cfg.augment.ssr_prob;
  aug["shift_limit"] = cfg.augment.shift_limit;
  aug["scale_limit"] = cfg.augment.scale_limit;
  aug["rotate_limit_deg"] = cfg.augment.rotate_limit_deg;
  aug["hflip_prob"] = cfg.augment.hflip_prob;
  j["augment"] = std::move(aug);

  json val;
  val["min_pixels"] = cfg.validity.min_pixels;
  val["min_aspect"] = cfg.validity.min_aspect;
  val["min_frames"] = cfg.validity.min_frames;
  val["temporal_iou"] = cfg.validity.temporal_iou;
  j["validity"] = std::move(val);

  json loss;
  loss["bce_weight"] = cfg.loss.bce_weight;
  loss["dice_weight"] = cfg.loss.dice_weight;
  loss["dice_smooth"] = cfg.loss.dice_smooth;
  loss["prob_clamp"] = cfg.loss.prob_clamp;
  j["loss"] = std::move(loss);

  return j.dump(2) + "\n";
}

uint64_t config_hash(const RunConfig& cfg) {
  std::string text = canonical_config_json(cfg);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

void write_resolved_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw IntegrityError("cannot open '" + path + "' for writing");
  f << canonical_config_json(cfg);
  if (!f) throw IntegrityError("short write to '" + path + "'");
}

}  // namespace contrailseg
