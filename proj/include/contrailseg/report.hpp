#pragma once

#include <string>
#include <vector>

#include "contrailseg/config.hpp"
#include "contrailseg/mask.hpp"
#include "contrailseg/train.hpp"

namespace contrailseg {

// Grayscale image [1,H,W] with the prediction tinted red and the truth
// boundary traced green.
void render_overlay_png(const std::string& path, const Tensor& image, const SoftMask& pred,
                        const HardMask* truth);

std::string crossval_report_json(const RunConfig& cfg, const CrossValResult& cv);
std::string eval_report_json(const RunConfig& cfg, const EvalResult& eval);
std::string two_phase_report_json(const RunConfig& cfg, const TwoPhaseResult& result);

struct AblationRow {
  std::string name;
  float dice = 0.0f;            // median over seeds
  std::vector<float> per_seed;
};

std::string ablation_report_json(const RunConfig& cfg, const std::vector<AblationRow>& rows);
std::string ablation_table_markdown(const std::vector<AblationRow>& rows);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace contrailseg
