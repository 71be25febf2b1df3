#include "contrailseg/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "contrailseg/errors.hpp"
#include "contrailseg/png_io.hpp"

using json = nlohmann::json;

namespace contrailseg {

namespace {

uint8_t to_byte(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(c * 255.0f + 0.5f);
}

bool edge_pixel(const HardMask& m, int y, int x) {
  if (!m.at(y, x)) return false;
  if (y == 0 || x == 0 || y == m.height - 1 || x == m.width - 1) return true;
  return !(m.at(y - 1, x) && m.at(y + 1, x) && m.at(y, x - 1) && m.at(y, x + 1));
}

json eval_items_json(const EvalResult& eval) {
  json items = json::array();
  for (const EvalItem& it : eval.items) {
    json j;
    j["sample_id"] = it.sample_id;
    j["frame"] = it.frame;
    j["dice"] = it.dice;
    items.push_back(std::move(j));
  }
  return items;
}

json crossval_json(const CrossValResult& cv) {
  json folds = json::array();
  for (const FoldResult& fr : cv.folds) {
    json j;
    j["fold"] = fr.fold;
    j["error"] = fr.error;
    j["checkpoint"] = fr.checkpoint;
    j["val_samples"] = fr.val_samples;
    folds.push_back(std::move(j));
  }
  json out;
  out["folds"] = std::move(folds);
  out["e_cv"] = cv.e_cv;
  out["best_fold"] = cv.best_fold;
  return out;
}

}  // namespace

void render_overlay_png(const std::string& path, const Tensor& image, const SoftMask& pred,
                        const HardMask* truth) {
  if (image.ndim() != 3 || image.dim(0) != 1)
    throw DimensionError("overlay expects image [1,H,W], got " + image.shape_str());
  int h = image.dim(1), w = image.dim(2);
  if (pred.height != h || pred.width != w)
    throw DimensionError("overlay prediction size mismatch");
  if (truth && (truth->height != h || truth->width != w))
    throw DimensionError("overlay truth size mismatch");

  std::vector<uint8_t> rgb(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float g = image.data[static_cast<size_t>(y) * w + x];
      float p = pred.at(y, x);
      float r = g + 0.55f * p;
      float gg = g;
      float b = g * (1.0f - 0.35f * p);
      if (truth && edge_pixel(*truth, y, x)) {
        r *= 0.3f;
        gg = 1.0f;
        b *= 0.3f;
      }
      size_t o = (static_cast<size_t>(y) * w + x) * 3;
      rgb[o] = to_byte(r);
      rgb[o + 1] = to_byte(gg);
      rgb[o + 2] = to_byte(b);
    }
  }
  write_png_rgb(path, h, w, rgb);
}

std::string crossval_report_json(const RunConfig& cfg, const CrossValResult& cv) {
  json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["crossval"] = crossval_json(cv);
  return out.dump(2) + "\n";
}

std::string eval_report_json(const RunConfig& cfg, const EvalResult& eval) {
  json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["pooled_dice"] = eval.pooled_dice;
  out["items"] = eval_items_json(eval);
  return out.dump(2) + "\n";
}

std::string two_phase_report_json(const RunConfig& cfg, const TwoPhaseResult& result) {
  json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["phase1"] = crossval_json(result.phase1);
  json p2;
  p2["eval_dice"] = result.phase2_eval.pooled_dice;
  p2["items"] = eval_items_json(result.phase2_eval);
  p2["checkpoint"] = result.phase2_checkpoint;
  out["phase2"] = std::move(p2);
  out["eval_samples"] = result.eval_samples;
  out["pseudo_dir"] = result.pseudo_dir;
  return out.dump(2) + "\n";
}

std::string ablation_report_json(const RunConfig& cfg, const std::vector<AblationRow>& rows) {
  json out;
  out["config_hash"] = config_hash_hex(cfg);
  json jr = json::array();
  for (const AblationRow& r : rows) {
    json j;
    j["name"] = r.name;
    j["dice"] = r.dice;
    j["per_seed"] = r.per_seed;
    jr.push_back(std::move(j));
  }
  out["rows"] = std::move(jr);
  return out.dump(2) + "\n";
}

std::string ablation_table_markdown(const std::vector<AblationRow>& rows) {
  std::string out = "| Configuration | Dice |\n|---|---|\n";
  char buf[32];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.dice);
    out += "| " + r.name + " | " + buf + " |\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IntegrityError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IntegrityError("short write to '" + path + "'");
}

}  // namespace contrailseg
