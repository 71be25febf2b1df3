// contrailseg: command-line front end for the contrail segmentation toolkit.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "contrailseg/checkpoint.hpp"
#include "contrailseg/config.hpp"
#include "contrailseg/dataset.hpp"
#include "contrailseg/errors.hpp"
#include "contrailseg/gradcheck.hpp"
#include "contrailseg/report.hpp"
#include "contrailseg/synth.hpp"
#include "contrailseg/train.hpp"
#include "contrailseg/validity.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace contrailseg;

namespace {

// Shared flag storage; only the chosen subcommand parses into it.
struct Flags {
  std::string config_path;
  uint64_t seed = 0;
  std::string out;
  std::string data;
  std::string unlabeled;
  std::string eval_dir;
  std::string checkpoint;
  std::string pred;
  std::string preset;
  int image_size = 0;
  int folds = 0;
  int epochs = 0;
  int samples = 0;
  int seeds = 1;
  bool use_mc = true;
  bool use_soft_labels = true;
  bool use_pseudo_labels = true;
};

std::string config_key_reference() {
  return "Configuration file keys (JSON) with their defaults:\n" +
         canonical_config_json(RunConfig{});
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON config file; flags override its values");
  sub->add_option("--seed", f.seed, "RNG seed (default 0)");
  sub->add_option("--out", f.out, "output directory (default 'out')");
  sub->footer("Keys below can appear in --config; every flag overrides the file.\n");
}

void add_data(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "input corpus directory");
}

void add_training(CLI::App* sub, Flags& f) {
  sub->add_option("--folds", f.folds, "cross-validation fold count (default 5)");
  sub->add_option("--epochs", f.epochs, "training epochs (default 20)");
  sub->add_flag("--use-mc,!--no-use-mc", f.use_mc,
                "half-pixel misalignment correction (default on)");
  sub->add_flag("--use-soft-labels,!--no-use-soft-labels", f.use_soft_labels,
                "annotator-fraction soft targets (default on)");
  sub->add_flag("--use-pseudo-labels,!--no-use-pseudo-labels", f.use_pseudo_labels,
                "pseudo-label phase-2 training");
  sub->add_option("--image-size", f.image_size, "synthetic scene height and width");
}

RunConfig effective_config(CLI::App* sub, const Flags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_run_config(f.config_path);
  auto passed = [&](const std::string& name) {
    return sub->get_option_no_throw(name) != nullptr && sub->count(name) > 0;
  };
  if (passed("--seed")) cfg.seed = f.seed;
  if (passed("--out")) cfg.out_dir = f.out;
  if (passed("--data")) cfg.data_dir = f.data;
  if (passed("--unlabeled")) cfg.unlabeled_dir = f.unlabeled;
  if (passed("--eval-dir")) cfg.eval_dir = f.eval_dir;
  if (passed("--folds")) cfg.train.folds = f.folds;
  if (passed("--epochs")) cfg.train.epochs = f.epochs;
  if (passed("--use-mc") || passed("--no-use-mc")) cfg.train.use_mc = f.use_mc;
  if (passed("--use-soft-labels") || passed("--no-use-soft-labels"))
    cfg.train.use_soft_labels = f.use_soft_labels;
  if (passed("--use-pseudo-labels") || passed("--no-use-pseudo-labels"))
    cfg.train.use_pseudo_labels = f.use_pseudo_labels;
  if (passed("--preset") && !f.preset.empty()) apply_preset(cfg.scene, f.preset);
  if (passed("--image-size")) {
    if (f.image_size < 1) throw ConfigError("--image-size must be >= 1");
    cfg.scene.height = cfg.scene.width = f.image_size;
  }
  if (passed("--samples")) {
    if (f.samples < 1) throw ConfigError("--samples must be >= 1");
    cfg.scene.num_samples = f.samples;
  }
  if (cfg.train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (cfg.train.folds < 2) throw ConfigError("train.folds must be >= 2");
  return cfg;
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions opt;
  opt.train = cfg.train;
  opt.augment = cfg.augment;
  opt.loss = cfg.loss;
  opt.network = cfg.network;
  opt.seed = cfg.seed;
  return opt;
}

void begin_output(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_resolved_config((fs::path(cfg.out_dir) / "config.json").string(), cfg);
}

Corpus load_required_corpus(const std::string& dir, const char* what) {
  if (dir.empty())
    throw ConfigError(std::string(what) + " corpus directory is required (--data or config)");
  return load_corpus(dir);
}

std::vector<int> all_samples(const Corpus& c) {
  std::vector<int> idx(c.samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

// ---- subcommand bodies ----------------------------------------------------

int run_synth(const RunConfig& cfg) {
  Corpus c = generate_corpus(cfg.scene, cfg.seed);
  begin_output(cfg);
  save_corpus(cfg.out_dir, c);
  std::printf("wrote %zu samples to %s\n", c.samples.size(), cfg.out_dir.c_str());
  return 0;
}

int run_train(const RunConfig& cfg) {
  Corpus c = load_required_corpus(cfg.data_dir, "training");
  begin_output(cfg);
  TrainOptions opt = train_options(cfg);
  SegModel model = train_on_corpus(c, opt);

  std::vector<NamedTensor> named;
  for (const Param& p : model.params()) named.push_back(NamedTensor{p.name, p.value});
  std::string ckpt = (fs::path(cfg.out_dir) / "model.ckpt").string();
  save_tensors(ckpt, named);

  EvalResult train_eval = evaluate_model(model, c, all_samples(c), opt);
  json j;
  j["config_hash"] = config_hash_hex(cfg);
  j["checkpoint"] = ckpt;
  j["train_dice"] = train_eval.pooled_dice;
  write_text_file((fs::path(cfg.out_dir) / "train.json").string(), j.dump(2) + "\n");
  std::printf("train dice %.4f, checkpoint %s\n", train_eval.pooled_dice, ckpt.c_str());
  return 0;
}

int run_crossval(const RunConfig& cfg) {
  Corpus c = load_required_corpus(cfg.data_dir, "training");
  begin_output(cfg);
  TrainOptions opt = train_options(cfg);
  CrossValResult cv = cross_validate(c, opt, cfg.out_dir);
  write_text_file((fs::path(cfg.out_dir) / "crossval.json").string(),
                  crossval_report_json(cfg, cv));
  for (const FoldResult& fr : cv.folds)
    std::printf("fold %d error %.4f\n", fr.fold, fr.error);
  std::printf("e_cv %.4f (best fold %d)\n", cv.e_cv, cv.best_fold);
  return 0;
}

int run_pseudolabel(const RunConfig& cfg, const std::string& checkpoint) {
  if (checkpoint.empty()) throw ConfigError("pseudolabel requires --checkpoint");
  Corpus c = load_required_corpus(cfg.data_dir, "unlabeled");
  begin_output(cfg);
  SegModel model = model_from_checkpoint(cfg.network, checkpoint);
  PseudoLabels labels = generate_pseudo_labels(model, c, cfg.train.use_mc);
  save_pseudo_labels(cfg.out_dir, c, labels);

  double mass = 0.0;
  size_t n = 0;
  for (const auto& sample : labels.targets)
    for (const Tensor& t : sample) {
      for (float v : t.data) mass += v;
      n += t.data.size();
    }
  json j;
  j["config_hash"] = config_hash_hex(cfg);
  j["units"] = static_cast<int>(c.samples.size()) * c.frames_per_sample;
  j["mean_foreground"] = n ? mass / static_cast<double>(n) : 0.0;
  write_text_file((fs::path(cfg.out_dir) / "pseudolabel.json").string(), j.dump(2) + "\n");
  std::printf("pseudo-labeled %zu samples into %s\n", c.samples.size(), cfg.out_dir.c_str());
  return 0;
}

int run_two_phase(const RunConfig& cfg) {
  Corpus labeled = load_required_corpus(cfg.data_dir, "labeled");
  Corpus unlabeled, eval_c;
  bool have_unlabeled = !cfg.unlabeled_dir.empty();
  bool have_eval = !cfg.eval_dir.empty();
  if (have_unlabeled) unlabeled = load_corpus(cfg.unlabeled_dir);
  if (have_eval) eval_c = load_corpus(cfg.eval_dir);
  begin_output(cfg);
  TrainOptions opt = train_options(cfg);
  TwoPhaseResult result =
      two_phase_train(labeled, have_unlabeled ? &unlabeled : nullptr,
                      have_eval ? &eval_c : nullptr, opt, cfg.out_dir);
  write_text_file((fs::path(cfg.out_dir) / "report.json").string(),
                  two_phase_report_json(cfg, result));
  std::printf("phase 1 e_cv %.4f, phase 2 eval dice %.4f\n", result.phase1.e_cv,
              result.phase2_eval.pooled_dice);
  return 0;
}

int run_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& pred) {
  Corpus c = load_required_corpus(cfg.data_dir, "evaluation");
  if (checkpoint.empty() == pred.empty())
    throw ConfigError("eval requires exactly one of --checkpoint or --pred");
  begin_output(cfg);

  EvalResult res;
  if (!checkpoint.empty()) {
    SegModel model = model_from_checkpoint(cfg.network, checkpoint);
    res = evaluate_model(model, c, all_samples(c), train_options(cfg));
  } else {
    std::vector<std::vector<HardMask>> preds(c.samples.size());
    if (fs::exists(fs::path(pred) / "manifest.json")) {
      // A corpus directory: its majority masks act as the predictions.
      Corpus pc = load_corpus(pred);
      for (size_t s = 0; s < c.samples.size(); ++s) {
        int match = -1;
        for (size_t q = 0; q < pc.samples.size(); ++q)
          if (pc.samples[q].id == c.samples[s].id) match = static_cast<int>(q);
        if (match < 0)
          throw FormatError("prediction corpus is missing sample '" + c.samples[s].id + "'");
        for (int f = 0; f < c.frames_per_sample; ++f)
          preds[s].push_back(sample_hard_target(pc, match, f));
      }
    } else {
      for (size_t s = 0; s < c.samples.size(); ++s) {
        for (int f = 0; f < c.frames_per_sample; ++f) {
          std::string path =
              (fs::path(pred) / (c.samples[s].id + "_mask_" + std::to_string(f) + ".ten"))
                  .string();
          preds[s].push_back(threshold(load_single_tensor(path), 0.5f));
        }
      }
    }
    res = evaluate_masks(c, preds);
  }
  write_text_file((fs::path(cfg.out_dir) / "eval.json").string(), eval_report_json(cfg, res));
  std::printf("dice %.6f over %zu units\n", res.pooled_dice, res.items.size());
  return 0;
}

int run_gradcheck(const RunConfig& cfg, int seeds) {
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  begin_output(cfg);
  std::vector<GradcheckCase> cases = gradcheck_suite(seeds);
  bool all_pass = true;
  json rows = json::array();
  for (const GradcheckCase& gc : cases) {
    std::printf("%-18s max_err %.3e  tol %.1e  %s\n", gc.name.c_str(),
                static_cast<double>(gc.max_error), static_cast<double>(gc.tolerance),
                gc.pass ? "PASS" : "FAIL");
    all_pass = all_pass && gc.pass;
    json j;
    j["name"] = gc.name;
    j["max_error"] = gc.max_error;
    j["tolerance"] = gc.tolerance;
    j["pass"] = gc.pass;
    rows.push_back(std::move(j));
  }
  json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["seeds"] = seeds;
  out["cases"] = std::move(rows);
  out["all_pass"] = all_pass;
  write_text_file((fs::path(cfg.out_dir) / "gradcheck.json").string(), out.dump(2) + "\n");
  if (!all_pass) throw TrainingError("gradient check failed");
  return 0;
}

int run_report(const RunConfig& cfg, const std::string& checkpoint) {
  if (checkpoint.empty()) throw ConfigError("report requires --checkpoint");
  Corpus c = load_required_corpus(cfg.data_dir, "report");
  begin_output(cfg);
  SegModel model = model_from_checkpoint(cfg.network, checkpoint);
  TrainOptions opt = train_options(cfg);

  std::vector<std::vector<HardMask>> preds(c.samples.size());
  json validity = json::array();
  for (size_t s = 0; s < c.samples.size(); ++s) {
    for (int f = 0; f < c.frames_per_sample; ++f) {
      Tensor in = unit_input(c, static_cast<int>(s), f, opt.train.use_mc);
      Tensor batched({1, 1, c.height, c.width});
      batched.data = in.data;
      Tensor probs = model.predict(batched);
      SoftMask soft = soft_from_tensor(probs);
      HardMask hard = threshold(probs, opt.train.threshold);
      preds[s].push_back(hard);

      HardMask truth = sample_hard_target(c, static_cast<int>(s), f);
      std::string stem = c.samples[s].id + "_" + std::to_string(f);
      render_overlay_png((fs::path(cfg.out_dir) / (stem + "_overlay.png")).string(),
                         c.samples[s].frames[static_cast<size_t>(f)], soft, &truth);
      save_tensor(
          (fs::path(cfg.out_dir) / (c.samples[s].id + "_mask_" + std::to_string(f) + ".ten"))
              .string(),
          mask_tensor(hard), "mask");
    }
    auto [kept, rep] = validity_filter(preds[s], cfg.validity);
    json js;
    js["sample_id"] = c.samples[s].id;
    json comps = json::array();
    for (const ComponentReport& cr : rep.components) {
      json j;
      j["frame"] = cr.frame;
      j["component"] = cr.component;
      j["area"] = cr.area;
      j["aspect"] = cr.aspect;
      j["kept"] = cr.kept;
      j["touches_edge"] = cr.touches_edge;
      comps.push_back(std::move(j));
    }
    js["components"] = std::move(comps);
    validity.push_back(std::move(js));
  }

  EvalResult res = evaluate_masks(c, preds);
  json metrics = json::parse(eval_report_json(cfg, res));
  metrics["validity"] = std::move(validity);
  write_text_file((fs::path(cfg.out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");
  std::printf("report for %zu samples in %s (dice %.4f)\n", c.samples.size(),
              cfg.out_dir.c_str(), res.pooled_dice);
  return 0;
}

int run_ablate(const RunConfig& base, int seeds) {
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  Corpus labeled = load_required_corpus(base.data_dir, "labeled");
  if (base.unlabeled_dir.empty())
    throw ConfigError("ablate requires unlabeled_dir for the pseudo-label row");
  Corpus unlabeled = load_corpus(base.unlabeled_dir);
  begin_output(base);

  struct RowDef {
    const char* name;
    const char* slug;
    bool mc, sl, pl;
  };
  const RowDef defs[4] = {{"Baseline", "baseline", false, false, false},
                          {"Baseline + MC", "mc", true, false, false},
                          {"Baseline + MC + SL", "mc_sl", true, true, false},
                          {"Baseline + MC + SL + PL", "mc_sl_pl", true, true, true}};

  std::vector<AblationRow> rows(4);
  for (int r = 0; r < 4; ++r) rows[static_cast<size_t>(r)].name = defs[r].name;

  for (int s = 0; s < seeds; ++s) {
    RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<uint64_t>(s);
    for (int r = 0; r < 4; ++r) {
      cfg.train.use_mc = defs[r].mc;
      cfg.train.use_soft_labels = defs[r].sl;
      cfg.train.use_pseudo_labels = defs[r].pl;
      TrainOptions opt = train_options(cfg);
      std::string row_dir =
          (fs::path(base.out_dir) / ("seed" + std::to_string(s)) / defs[r].slug).string();

      float dice;
      if (defs[r].pl) {
        TwoPhaseResult result = two_phase_train(labeled, &unlabeled, nullptr, opt, row_dir);
        dice = result.phase2_eval.pooled_dice;
      } else {
        std::vector<int> eval_samples =
            carved_eval_split(static_cast<int>(labeled.samples.size()), opt);
        std::vector<bool> held(labeled.samples.size(), false);
        for (int i : eval_samples) held[static_cast<size_t>(i)] = true;
        Corpus pool;
        pool.convention = labeled.convention;
        pool.annotators = labeled.annotators;
        pool.height = labeled.height;
        pool.width = labeled.width;
        pool.frames_per_sample = labeled.frames_per_sample;
        for (size_t i = 0; i < labeled.samples.size(); ++i)
          if (!held[i]) pool.samples.push_back(labeled.samples[i]);
        CrossValResult cv = cross_validate(pool, opt, row_dir);
        SegModel best = model_from_checkpoint(
            opt.network, cv.folds[static_cast<size_t>(cv.best_fold)].checkpoint);
        dice = evaluate_model(best, labeled, eval_samples, opt).pooled_dice;
      }
      rows[static_cast<size_t>(r)].per_seed.push_back(dice);
      std::printf("seed %d  %-24s dice %.4f\n", s, defs[r].name, dice);
    }
  }

  for (AblationRow& row : rows) {
    std::vector<float> sorted = row.per_seed;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    row.dice = n % 2 ? sorted[n / 2] : 0.5f * (sorted[n / 2 - 1] + sorted[n / 2]);
  }

  write_text_file((fs::path(base.out_dir) / "ablation.json").string(),
                  ablation_report_json(base, rows));
  std::string table = ablation_table_markdown(rows);
  write_text_file((fs::path(base.out_dir) / "table.md").string(), table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrail segmentation toolkit"};
  app.require_subcommand(1);
  app.footer(config_key_reference());

  Flags f;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth, f);
  synth->add_option("--preset", f.preset, "scene preset: default | easy");
  synth->add_option("--samples", f.samples, "number of samples to generate");
  synth->add_option("--image-size", f.image_size, "scene height and width");

  CLI::App* train = app.add_subcommand("train", "fit one model on a corpus");
  add_common(train, f);
  add_data(train, f);
  add_training(train, f);

  CLI::App* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  add_common(crossval, f);
  add_data(crossval, f);
  add_training(crossval, f);

  CLI::App* pseudo = app.add_subcommand("pseudolabel", "predict soft labels for a corpus");
  add_common(pseudo, f);
  add_data(pseudo, f);
  pseudo->add_option("--checkpoint", f.checkpoint, "model checkpoint to predict with");
  pseudo->add_flag("--use-mc,!--no-use-mc", f.use_mc, "apply misalignment correction");

  CLI::App* two_phase =
      app.add_subcommand("two-phase", "cross-validate, pseudo-label, retrain, evaluate");
  add_common(two_phase, f);
  add_data(two_phase, f);
  add_training(two_phase, f);
  two_phase->add_option("--unlabeled", f.unlabeled, "unlabeled corpus for pseudo-labeling");
  two_phase->add_option("--eval-dir", f.eval_dir, "held-out evaluation corpus");

  CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against corpus labels");
  add_common(eval_cmd, f);
  add_data(eval_cmd, f);
  eval_cmd->add_option("--checkpoint", f.checkpoint, "model checkpoint to evaluate");
  eval_cmd->add_option("--pred", f.pred,
                       "prediction masks: a corpus directory or <id>_mask_<frame>.ten files");
  eval_cmd->add_flag("--use-mc,!--no-use-mc", f.use_mc, "apply misalignment correction");

  CLI::App* ablate = app.add_subcommand("ablate", "four-row ablation study");
  add_common(ablate, f);
  add_data(ablate, f);
  add_training(ablate, f);
  ablate->add_option("--unlabeled", f.unlabeled, "unlabeled corpus for the pseudo-label row");
  ablate->add_option("--seeds", f.seeds, "seeds to run; the table reports medians");

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient oracles");
  add_common(gradcheck_cmd, f);
  gradcheck_cmd->add_option("--seeds", f.seeds, "random draws per case (default 20)");

  CLI::App* report = app.add_subcommand("report", "overlay PNGs and JSON metrics");
  add_common(report, f);
  add_data(report, f);
  report->add_option("--checkpoint", f.checkpoint, "model checkpoint to render");
  report->add_flag("--use-mc,!--no-use-mc", f.use_mc, "apply misalignment correction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig cfg = effective_config(sub, f);
    if (sub == synth) return run_synth(cfg);
    if (sub == train) return run_train(cfg);
    if (sub == crossval) return run_crossval(cfg);
    if (sub == pseudo) return run_pseudolabel(cfg, f.checkpoint);
    if (sub == two_phase) return run_two_phase(cfg);
    if (sub == eval_cmd) return run_eval(cfg, f.checkpoint, f.pred);
    if (sub == ablate) return run_ablate(cfg, f.seeds);
    if (sub == gradcheck_cmd)
      return run_gradcheck(cfg, sub->count("--seeds") ? f.seeds : 20);
    if (sub == report) return run_report(cfg, f.checkpoint);
    throw UsageError("unhandled subcommand");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
