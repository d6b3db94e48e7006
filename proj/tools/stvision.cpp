// stvision — spatiotemporal interest points, HoGHoF/HueSTIP descriptors,
// bag-of-features encoding and one-vs-one linear classification over a
// manifest of clips.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stv/pipeline.hpp"
#include "stv/synthgen.hpp"

namespace {

std::vector<stv::ScalePair> parse_scales(const std::string& s) {
  std::vector<stv::ScalePair> out;
  for (const auto& item : stv::split(s, ',')) {
    const auto parts = stv::split(item, ':');
    if (parts.size() != 2)
      throw CLI::ValidationError("--scales", "want sigma2:tau2[,...]");
    out.push_back({stv::parse_double(parts[0], "scales"),
                   stv::parse_double(parts[1], "scales")});
  }
  return out;
}

std::vector<stv::Kind> parse_kinds(const std::string& s) {
  if (s == "both") return {stv::Kind::HoGHoF, stv::Kind::HueSTIP};
  return {stv::kind_from_name(s)};
}

// Expands "--config FILE" into option tokens placed before the explicit
// flags, so values from the key=value file are applied first and any flag
// given on the command line overrides them (every option takes the last
// occurrence).
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  size_t at = args.size();
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      at = i;
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      at = i;
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;

  std::vector<std::string> expanded(args.begin(), args.begin() + at);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": want key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (value == "true" || value == "false") {
      if (value == "true") expanded.push_back("--" + key);
    } else {
      expanded.push_back("--" + key);
      expanded.push_back(value);
    }
  }
  expanded.insert(expanded.end(), args.begin() + at, args.end());
  return expanded;
}

struct CommonOpts {
  std::string manifest;
  std::string out = "stvision-out";
  std::string kind = "both";
  std::string scales;
  double harris_k = 5e-4;
  double integration = 4.0;
  double threshold = 1e-9;
  int top_n = 0;
  std::string nms;
  double extent = 4.5;
  int hue_bins = 36;
  bool hue_per_cell = false;
  double hue_mask_scale = 1.0;
  std::string norm = "l1";
  double no_motion = 0.25;
  int vocab_k = 4000;
  uint64_t seed = 1;
  double svm_c = 1.0;
  bool cv_c = false;
  bool raw_counts = false;
  bool detect_per_kind = false;
  bool tsv = false;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_manifest = true) {
  cmd->add_option("--config", "key=value config file (flags override it)");
  auto* m = cmd->add_option("--manifest", o.manifest, "dataset manifest.tsv");
  if (needs_manifest) m->required();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--kind", o.kind, "stip|huestip|both")
      ->check(CLI::IsMember({"stip", "hoghof", "huestip", "both"}));
  cmd->add_option("--scales", o.scales,
                  "detector scale list as sigma2:tau2[,...]");
  cmd->add_option("--harris-k", o.harris_k, "response constant k");
  cmd->add_option("--integration", o.integration,
                  "integration variance factor");
  cmd->add_option("--threshold", o.threshold, "minimum response H");
  cmd->add_option("--top-n", o.top_n, "keep only the N strongest points");
  cmd->add_option("--nms", o.nms,
                  "fixed NMS radii rx:ry:rt (default: derived from scale)");
  cmd->add_option("--extent", o.extent, "patch half-extent factor (x sigma)");
  cmd->add_option("--hue-bins", o.hue_bins, "hue histogram bins");
  cmd->add_flag("--hue-per-cell", o.hue_per_cell,
                "one hue histogram per cell instead of one per patch");
  cmd->add_option("--hue-mask-scale", o.hue_mask_scale,
                  "scale of the hue Gaussian mask");
  cmd->add_option("--norm", o.norm, "histogram normalization")
      ->check(CLI::IsMember({"l1", "l2"}));
  cmd->add_option("--no-motion-thresh", o.no_motion,
                  "flow magnitude below which a pixel is static");
  cmd->add_option("--vocab-k", o.vocab_k, "vocabulary size K");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--svm-c", o.svm_c, "SVM regularization C");
  cmd->add_flag("--cv-c", o.cv_c, "select C by 5-fold cross-validation");
  cmd->add_flag("--raw-counts", o.raw_counts,
                "train on raw counts instead of normalized histograms");
  cmd->add_flag("--detect-per-kind", o.detect_per_kind,
                "run a separate detection pass per descriptor kind");
  cmd->add_flag("--tsv", o.tsv, "also write descriptor TSVs");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
  for (auto* opt : cmd->get_options()) opt->take_last();
}

stv::PipelineConfig make_config(const CommonOpts& o) {
  stv::PipelineConfig cfg;
  cfg.manifest = o.manifest;
  cfg.out_dir = o.out;
  if (!o.scales.empty()) cfg.detector.scales = parse_scales(o.scales);
  cfg.detector.k = o.harris_k;
  cfg.detector.integration_factor = o.integration;
  cfg.detector.threshold = o.threshold;
  cfg.detector.top_n = o.top_n;
  if (!o.nms.empty()) {
    const auto parts = stv::split(o.nms, ':');
    if (parts.size() != 3)
      throw CLI::ValidationError("--nms", "want rx:ry:rt");
    cfg.detector.nms_radius = {int(stv::parse_long(parts[0], "nms")),
                               int(stv::parse_long(parts[1], "nms")),
                               int(stv::parse_long(parts[2], "nms"))};
  }
  cfg.descriptor.extent_factor = o.extent;
  cfg.descriptor.hue_bins = o.hue_bins;
  cfg.descriptor.hue_per_cell = o.hue_per_cell;
  cfg.descriptor.hue_mask_scale = o.hue_mask_scale;
  cfg.descriptor.norm = o.norm == "l2" ? stv::Norm::l2 : stv::Norm::l1;
  cfg.descriptor.no_motion_thresh = o.no_motion;
  cfg.kinds = parse_kinds(o.kind);
  cfg.vocab_k = o.vocab_k;
  cfg.vocab_seed = o.seed;
  cfg.svm_c = o.svm_c;
  cfg.cv_c = o.cv_c;
  cfg.normalize = !o.raw_counts;
  cfg.detect_per_kind = o.detect_per_kind;
  cfg.write_tsv = o.tsv;
  cfg.jobs = o.jobs;
  return cfg;
}

void print_reports(const std::map<stv::Kind, stv::EvalReport>& reports,
                   const stv::PipelineConfig& cfg) {
  std::vector<std::pair<std::string, const stv::EvalReport*>> cols;
  for (const auto& [k, r] : reports) cols.emplace_back(stv::kind_name(k), &r);
  std::cout << stv::render_report_table(cols);
  std::cout << "reports written under " << cfg.out_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal video features: detect, describe, encode, classify"};
  app.require_subcommand(1);

  // ---- synth ----
  struct {
    std::string out = "synth-data";
    std::string dataset = "color-action";
    int n_per_class = 20;
    uint64_t seed = 1;
    int width = 64, height = 64, frames = 40;
    double noise = 0.02;
  } so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", "key=value config file (flags override it)");
  synth->add_option("--out", so.out, "output directory")->required();
  synth->add_option("--dataset", so.dataset, "color-action|moving-corner")
      ->check(CLI::IsMember({"color-action", "moving-corner"}));
  synth->add_option("--n-per-class", so.n_per_class, "clips per class");
  synth->add_option("--seed", so.seed, "RNG seed");
  synth->add_option("--width", so.width, "frame width");
  synth->add_option("--height", so.height, "frame height");
  synth->add_option("--frames", so.frames, "clip length");
  synth->add_option("--noise", so.noise, "gray noise stddev");
  for (auto* opt : synth->get_options()) opt->take_last();

  CommonOpts o;
  auto* extract = app.add_subcommand("extract", "detect points and compute descriptors");
  auto* vocab = app.add_subcommand("vocab", "build the visual vocabulary");
  auto* encode = app.add_subcommand("encode", "encode clips as word histograms");
  auto* train = app.add_subcommand("train", "train the one-vs-one classifier");
  auto* eval = app.add_subcommand("eval", "classify the test split and report");
  auto* run = app.add_subcommand("run", "all five stages");
  for (CLI::App* cmd : {extract, vocab, encode, train, eval, run})
    add_common(cmd, o);

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) {
      if (so.dataset == "color-action") {
        auto ds = stv::color_action_dataset(
            so.n_per_class, stv::default_color_action_classes(), so.seed,
            so.width, so.height, so.frames, so.noise);
        stv::write_dataset(ds, so.out);
        std::cout << "wrote " << ds.clips.size() << " clips + manifest.tsv to "
                  << so.out << "\n";
      } else {
        stv::SynthSpec spec;
        spec.width = so.width;
        spec.height = so.height;
        spec.frames = so.frames;
        spec.turnaround = so.frames / 2;
        spec.noise_std = so.noise;
        spec.seed = so.seed;
        spec.start_x = 2.0;
        spec.start_y = (so.height - spec.side) / 2.0;
        auto mc = stv::moving_corner_clip(spec);
        stv::write_clip_ppm(mc.clip, stv::fs::path(so.out) / "corner");
        std::cout << "wrote corner clip; event at (" << mc.event.x << ", "
                  << mc.event.y << ", t=" << mc.event.t << ")\n";
      }
      return 0;
    }

    const stv::PipelineConfig cfg = make_config(o);
    stv::Pipeline pipe(cfg);
    if (extract->parsed()) {
      pipe.extract();
      std::cout << "extraction done (" << pipe.entries().size() << " clips)\n";
    } else if (vocab->parsed()) {
      pipe.extract();
      for (stv::Kind k : cfg.kinds) pipe.build_vocab(k);
      std::cout << "vocabularies built\n";
    } else if (encode->parsed()) {
      pipe.extract();
      for (stv::Kind k : cfg.kinds) {
        pipe.build_vocab(k);
        pipe.encode_clips(k);
      }
      std::cout << "encodings written\n";
    } else if (train->parsed()) {
      pipe.extract();
      for (stv::Kind k : cfg.kinds) {
        pipe.build_vocab(k);
        pipe.encode_clips(k);
        pipe.train(k);
      }
      std::cout << "models written\n";
    } else if (eval->parsed() || run->parsed()) {
      auto reports = pipe.run();
      print_reports(reports, cfg);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
