#include "contrailseg/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "contrailseg/checkpoint.hpp"
#include "contrailseg/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace contrailseg {

namespace {

json parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IntegrityError("missing file '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw FormatError(path + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path + "." + key + " is missing");
  return *it;
}

int require_int(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw FormatError(path + "." + key + " must be an integer");
  return v.get<int>();
}

std::string require_str(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw FormatError(path + "." + key + " must be a string");
  return v.get<std::string>();
}

const json& require_arr(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw FormatError(path + "." + key + " must be an array");
  return v;
}

std::vector<Ring> parse_polygons(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw FormatError(path + " must be an array");
  std::vector<Ring> rings;
  for (size_t r = 0; r < arr.size(); ++r) {
    std::string rp = path + "[" + std::to_string(r) + "]";
    const json& jr = arr[r];
    if (!jr.is_array()) throw FormatError(rp + " must be an array of [x,y] pairs");
    Ring ring;
    for (size_t v = 0; v < jr.size(); ++v) {
      std::string vp = rp + "[" + std::to_string(v) + "]";
      const json& jv = jr[v];
      if (!jv.is_array() || jv.size() != 2 || !jv[0].is_number() || !jv[1].is_number())
        throw FormatError(vp + " must be a [x,y] number pair");
      ring.push_back(Vec2{jv[0].get<double>(), jv[1].get<double>()});
    }
    if (ring.size() < 3) throw FormatError(rp + " needs at least 3 vertices");
    rings.push_back(std::move(ring));
  }
  return rings;
}

json polygons_to_json(const std::vector<Ring>& rings) {
  json arr = json::array();
  for (const Ring& ring : rings) {
    json jr = json::array();
    for (const Vec2& v : ring) jr.push_back(json::array({v.x, v.y}));
    arr.push_back(std::move(jr));
  }
  return arr;
}

std::vector<PolygonAnnotation> parse_annotators(const json& arr, const std::string& path) {
  std::vector<PolygonAnnotation> out;
  for (size_t a = 0; a < arr.size(); ++a) {
    std::string ap = path + "[" + std::to_string(a) + "]";
    PolygonAnnotation ann;
    ann.annotator_id = require_int(arr[a], "id", ap);
    ann.polygons = parse_polygons(require_arr(arr[a], "polygons", ap), ap + ".polygons");
    out.push_back(std::move(ann));
  }
  return out;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IntegrityError("cannot open '" + path + "' for writing");
  f << j.dump(2) << "\n";
  if (!f) throw IntegrityError("short write to '" + path + "'");
}

}  // namespace

Corpus load_corpus(const std::string& dir) {
  std::string mpath = (fs::path(dir) / "manifest.json").string();
  json m = parse_file(mpath);
  const std::string root = "manifest";

  std::string format = require_str(m, "format", root);
  if (format != "contrailseg-corpus-v1")
    throw FormatError(root + ".format: unsupported value '" + format + "'");

  Corpus c;
  c.convention = convention_from_string(require_str(m, "convention", root));
  c.annotators = require_int(m, "annotators", root);
  c.height = require_int(m, "height", root);
  c.width = require_int(m, "width", root);
  c.frames_per_sample = require_int(m, "frames", root);
  if (c.height < 1 || c.width < 1) throw FormatError(root + ".height/width must be positive");
  if (c.frames_per_sample < 1) throw FormatError(root + ".frames must be >= 1");
  if (c.annotators < 1) throw FormatError(root + ".annotators must be >= 1");

  const json& samples = require_arr(m, "samples", root);
  for (size_t s = 0; s < samples.size(); ++s) {
    std::string sp = root + ".samples[" + std::to_string(s) + "]";
    if (!samples[s].is_string()) throw FormatError(sp + " must be a sample id string");
    SampleRecord rec;
    rec.id = samples[s].get<std::string>();
    rec.height = c.height;
    rec.width = c.width;
    fs::path sdir = fs::path(dir) / rec.id;

    for (int fidx = 0; fidx < c.frames_per_sample; ++fidx) {
      std::string fpath = (sdir / ("frame_" + std::to_string(fidx) + ".ten")).string();
      Tensor img = load_single_tensor(fpath);
      if (img.ndim() != 3 || img.dim(0) != 1 || img.dim(1) != c.height || img.dim(2) != c.width)
        throw FormatError(fpath + ": expected shape [1," + std::to_string(c.height) + "," +
                          std::to_string(c.width) + "], got " + img.shape_str());
      rec.frames.push_back(std::move(img));
    }

    std::string apath = (sdir / "annotations.json").string();
    json a = parse_file(apath);
    std::string aid = require_str(a, "sample_id", "annotations");
    if (aid != rec.id)
      throw FormatError(apath + ": sample_id '" + aid + "' does not match directory '" +
                        rec.id + "'");
    json frames_arr;
    if (a.contains("frames")) {
      frames_arr = require_arr(a, "frames", "annotations");
    } else {
      // single-frame shorthand: annotators at top level
      frames_arr = json::array({json{{"annotators", require_arr(a, "annotators", "annotations")}}});
    }
    if (static_cast<int>(frames_arr.size()) != c.frames_per_sample)
      throw FormatError(apath + ": expected " + std::to_string(c.frames_per_sample) +
                        " frames, got " + std::to_string(frames_arr.size()));
    for (size_t fidx = 0; fidx < frames_arr.size(); ++fidx) {
      std::string fp = "annotations.frames[" + std::to_string(fidx) + "]";
      AnnotationSet set;
      set.sample_id = rec.id;
      set.annotations = parse_annotators(require_arr(frames_arr[fidx], "annotators", fp),
                                         fp + ".annotators");
      rec.annotations.push_back(std::move(set));
    }

    std::string tpath = (sdir / "truth.json").string();
    if (fs::exists(tpath)) {
      json t = parse_file(tpath);
      const json& tf = require_arr(t, "frames", "truth");
      if (static_cast<int>(tf.size()) != c.frames_per_sample)
        throw FormatError(tpath + ": expected " + std::to_string(c.frames_per_sample) +
                          " frames, got " + std::to_string(tf.size()));
      for (size_t fidx = 0; fidx < tf.size(); ++fidx) {
        std::string fp = "truth.frames[" + std::to_string(fidx) + "]";
        rec.truth.push_back(
            parse_polygons(require_arr(tf[fidx], "polygons", fp), fp + ".polygons"));
      }
    }
    c.samples.push_back(std::move(rec));
  }
  return c;
}

void save_corpus(const std::string& dir, const Corpus& corpus) {
  fs::create_directories(dir);
  json m;
  m["format"] = "contrailseg-corpus-v1";
  m["convention"] = to_string(corpus.convention);
  m["annotators"] = corpus.annotators;
  m["height"] = corpus.height;
  m["width"] = corpus.width;
  m["frames"] = corpus.frames_per_sample;
  json ids = json::array();
  for (const SampleRecord& rec : corpus.samples) ids.push_back(rec.id);
  m["samples"] = ids;
  write_json_file((fs::path(dir) / "manifest.json").string(), m);

  for (const SampleRecord& rec : corpus.samples) {
    fs::path sdir = fs::path(dir) / rec.id;
    fs::create_directories(sdir);
    for (size_t fidx = 0; fidx < rec.frames.size(); ++fidx)
      save_tensor((sdir / ("frame_" + std::to_string(fidx) + ".ten")).string(),
                  rec.frames[fidx], "image");

    json a;
    a["sample_id"] = rec.id;
    json frames = json::array();
    for (const AnnotationSet& set : rec.annotations) {
      json annotators = json::array();
      for (const PolygonAnnotation& ann : set.annotations) {
        json ja;
        ja["id"] = ann.annotator_id;
        ja["polygons"] = polygons_to_json(ann.polygons);
        annotators.push_back(std::move(ja));
      }
      frames.push_back(json{{"annotators", std::move(annotators)}});
    }
    a["frames"] = std::move(frames);
    write_json_file((sdir / "annotations.json").string(), a);

    if (!rec.truth.empty()) {
      json t;
      json tf = json::array();
      for (const std::vector<Ring>& rings : rec.truth)
        tf.push_back(json{{"polygons", polygons_to_json(rings)}});
      t["frames"] = std::move(tf);
      write_json_file((sdir / "truth.json").string(), t);
    }
  }
}

SoftMask sample_soft_target(const Corpus& c, int sample, int frame) {
  const SampleRecord& rec = c.samples.at(static_cast<size_t>(sample));
  return aggregate_soft(rec.annotations.at(static_cast<size_t>(frame)), c.height, c.width,
                        c.convention);
}

HardMask sample_hard_target(const Corpus& c, int sample, int frame) {
  const SampleRecord& rec = c.samples.at(static_cast<size_t>(sample));
  return aggregate_majority(rec.annotations.at(static_cast<size_t>(frame)), c.height, c.width,
                            c.convention);
}

void save_pseudo_labels(const std::string& dir, const Corpus& unlabeled,
                        const PseudoLabels& labels) {
  if (labels.targets.size() != unlabeled.samples.size())
    throw DimensionError("pseudo labels cover " + std::to_string(labels.targets.size()) +
                         " samples, corpus has " + std::to_string(unlabeled.samples.size()));
  fs::create_directories(dir);
  json m;
  m["format"] = "contrailseg-pseudo-v1";
  json ids = json::array();
  for (const SampleRecord& rec : unlabeled.samples) ids.push_back(rec.id);
  m["samples"] = ids;
  write_json_file((fs::path(dir) / "manifest.json").string(), m);
  for (size_t s = 0; s < labels.targets.size(); ++s) {
    for (size_t f = 0; f < labels.targets[s].size(); ++f) {
      std::string path = (fs::path(dir) / (unlabeled.samples[s].id + "_target_" +
                                           std::to_string(f) + ".ten"))
                             .string();
      save_tensor(path, labels.targets[s][f], "target");
    }
  }
}

PseudoLabels load_pseudo_labels(const std::string& dir, const Corpus& unlabeled) {
  std::string mpath = (fs::path(dir) / "manifest.json").string();
  json m = parse_file(mpath);
  std::string format = require_str(m, "format", "pseudo-manifest");
  if (format != "contrailseg-pseudo-v1")
    throw FormatError("pseudo-manifest.format: unsupported value '" + format + "'");

  PseudoLabels out;
  out.targets.resize(unlabeled.samples.size());
  for (size_t s = 0; s < unlabeled.samples.size(); ++s) {
    for (int f = 0; f < unlabeled.frames_per_sample; ++f) {
      std::string path = (fs::path(dir) / (unlabeled.samples[s].id + "_target_" +
                                           std::to_string(f) + ".ten"))
                             .string();
      Tensor t = load_single_tensor(path);
      if (t.ndim() != 3 || t.dim(0) != 1 || t.dim(1) != unlabeled.height ||
          t.dim(2) != unlabeled.width)
        throw FormatError(path + ": expected shape [1," + std::to_string(unlabeled.height) +
                          "," + std::to_string(unlabeled.width) + "], got " + t.shape_str());
      out.targets[s].push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace contrailseg
