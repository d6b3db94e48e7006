#pragma once

// Five-stage protocol over a manifest: extract -> vocab -> encode ->
// train -> eval, per descriptor kind.
//
// Every intermediate artifact is persisted under a content-addressed
// filename (FNV-1a over the stage name, the stage-relevant configuration
// and the input bytes), so an unchanged rerun is pure cache hits and
// byte-identical, and deleting any one cached file just recomputes it.
// Detection runs once per clip and is shared by both descriptor kinds.

#include <atomic>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stv/bof.hpp"
#include "stv/descriptor.hpp"
#include "stv/detector.hpp"
#include "stv/svm.hpp"
#include "stv/util.hpp"
#include "stv/video_io.hpp"

namespace stv {

struct PipelineConfig {
  fs::path manifest;
  fs::path out_dir;
  DetectorParams detector;
  DescriptorParams descriptor;
  std::vector<Kind> kinds = {Kind::HoGHoF, Kind::HueSTIP};
  int vocab_k = 4000;
  uint64_t vocab_seed = 1;
  double svm_c = 1.0;
  bool cv_c = false;  // pick C by 5-fold CV on the training split
  bool normalize = true;
  bool detect_per_kind = false;  // separate detection pass per kind
  bool write_tsv = false;  // also emit descriptor TSVs for inspection
  int jobs = 0;            // clip-level parallelism; 0 = hardware threads
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& clip,
             const std::string& msg)
      : std::runtime_error("stage " + stage +
                           (clip.empty() ? "" : " (clip " + clip + ")") + ": " +
                           msg) {}
};

namespace detail {

inline std::string scales_str(const std::vector<ScalePair>& s) {
  std::string out;
  for (const auto& p : s) out += fmt_g17(p.sigma2) + "," + fmt_g17(p.tau2) + ";";
  return out;
}

inline std::string detector_config_str(const DetectorParams& p) {
  return "k=" + fmt_g17(p.k) + " scales=" + scales_str(p.scales) +
         " s=" + fmt_g17(p.integration_factor) +
         " thr=" + fmt_g17(p.threshold) + " topn=" + std::to_string(p.top_n) +
         " trunc=" + fmt_g17(p.truncation) + " nms=" +
         std::to_string(p.nms_radius.rx) + "," +
         std::to_string(p.nms_radius.ry) + "," +
         std::to_string(p.nms_radius.rt);
}

inline std::string descriptor_config_str(const DescriptorParams& p) {
  return "ext=" + fmt_g17(p.extent_factor) +
         " win=" + std::to_string(p.flow_window) +
         " still=" + fmt_g17(p.no_motion_thresh) +
         " bins=" + std::to_string(p.hue_bins) +
         " percell=" + std::to_string(p.hue_per_cell) +
         " maskscale=" + fmt_g17(p.hue_mask_scale) +
         " norm=" + std::to_string(int(p.norm));
}

// hash of the decoded-input bytes of a clip (frame files or the y4m stream)
inline uint64_t clip_content_hash(const fs::path& path) {
  uint64_t h = fnv1a64("clip");
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      h = fnv1a64(f.filename().string(), h);
      h = fnv1a64(read_file_bytes(f), h);
    }
  } else {
    h = fnv1a64(read_file_bytes(path), h);
  }
  return h;
}

// compute-or-reuse: returns the artifact bytes, writing on miss
template <typename Fn>
inline std::string cached(const fs::path& path, Fn&& compute) {
  if (fs::exists(path)) return read_file_bytes(path);
  std::string bytes = compute();
  atomic_write_file(path, bytes);
  return bytes;
}

template <typename Fn>
inline void parallel_for(size_t n, int jobs, Fn&& fn) {
  int workers = jobs > 0 ? jobs : int(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, int(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::future<void>> futs;
  for (int w = 0; w < workers; ++w)
    futs.push_back(std::async(std::launch::async, [&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    }));
  for (auto& f : futs) f.get();  // propagates the first exception
}

}  // namespace detail

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    entries_ = read_manifest(cfg_.manifest);
    if (entries_.empty())
      throw StageError("setup", "", "manifest is empty");
    fs::create_directories(cache_dir());
    for (size_t i = 0; i < entries_.size(); ++i) clip_hash_.push_back(0);
  }

  const std::vector<ManifestEntry>& entries() const { return entries_; }

  // stage 1: detection + descriptors for every clip and kind
  void extract() {
    detail::parallel_for(entries_.size(), cfg_.jobs, [&](size_t i) {
      const ManifestEntry& e = entries_[i];
      try {
        const uint64_t chash = clip_hash(i);
        std::optional<Clip> clip;  // loaded lazily on any cache miss
        auto need_clip = [&]() -> const Clip& {
          if (!clip) clip = load_clip_auto(e.resolved);
          return *clip;
        };

        // one shared detection pass by default; per-kind when configured
        auto points_for = [&](const Kind* kind) {
          return detail::cached(points_file(i, chash, kind), [&] {
            return points_to_tsv(clip_id(i),
                                 detect(to_grayscale(need_clip()), cfg_.detector));
          });
        };
        std::string shared_pts;
        if (!cfg_.detect_per_kind) shared_pts = points_for(nullptr);

        for (Kind kind : cfg_.kinds) {
          const std::string pts_tsv =
              cfg_.detect_per_kind ? points_for(&kind) : shared_pts;
          const fs::path dpath = desc_file(i, kind, chash);
          const std::string bytes = detail::cached(dpath, [&] {
            auto recs = extract_descriptors(need_clip(), points_from_tsv(pts_tsv),
                                            kind, cfg_.descriptor);
            return descriptors_to_binary(clip_id(i), kind, recs);
          });
          const fs::path tsv_path = fs::path(dpath).replace_extension(".tsv");
          if (cfg_.write_tsv && !fs::exists(tsv_path)) {
            auto f = descriptors_from_binary(bytes, clip_id(i));
            atomic_write_file(tsv_path, descriptors_to_tsv(clip_id(i), f.records));
          }
        }
      } catch (const StageError&) {
        throw;
      } catch (const std::exception& ex) {
        throw StageError("extract", clip_id(i), ex.what());
      }
    });
  }

  // stage 2: one vocabulary per kind, training split only
  void build_vocab(Kind kind) {
    try {
      uint64_t h = fnv1a64("vocab " + std::string(kind_name(kind)) +
                           " k=" + std::to_string(cfg_.vocab_k) +
                           " seed=" + std::to_string(cfg_.vocab_seed));
      std::vector<FeatureVector> stream;
      for (size_t i = 0; i < entries_.size(); ++i) {
        if (!entries_[i].train) continue;
        const std::string bytes = read_file_bytes(desc_file(i, kind, clip_hash(i)));
        h = fnv1a64(bytes, h);
        auto f = descriptors_from_binary(bytes, clip_id(i));
        for (auto& r : f.records) stream.push_back(std::move(r.fv));
      }
      detail::cached(cache_dir() / ("vocab-" + kind_tag(kind) + "-" + hex16(h) +
                                    ".stvv"),
                     [&] {
                       return vocabulary_to_bytes(
                           build_vocabulary(stream, cfg_.vocab_k, cfg_.vocab_seed));
                     });
      vocab_path_[kind] = cache_dir() / ("vocab-" + kind_tag(kind) + "-" +
                                         hex16(h) + ".stvv");
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& ex) {
      throw StageError("vocab", "", ex.what());
    }
  }

  // stage 3: per-clip visual-word histograms
  void encode_clips(Kind kind) {
    const Vocabulary vocab = load_vocab(kind);
    const uint64_t vhash = fnv1a64(read_file_bytes(vocab_path_.at(kind)));
    std::vector<std::string> lines(entries_.size());
    detail::parallel_for(entries_.size(), cfg_.jobs, [&](size_t i) {
      try {
        const std::string dbytes =
            read_file_bytes(desc_file(i, kind, clip_hash(i)));
        const uint64_t key =
            fnv1a64(dbytes, fnv1a64("bof", vhash));
        lines[i] = detail::cached(
            cache_dir() / ("bof-" + kind_tag(kind) + "-" + clip_id(i) + "-" +
                           hex16(key) + ".tsv"),
            [&] {
              auto f = descriptors_from_binary(dbytes, clip_id(i));
              std::vector<FeatureVector> fvs;
              for (auto& r : f.records) fvs.push_back(std::move(r.fv));
              BofHistogram h = encode(fvs, vocab, false);
              h.clip_id = clip_id(i);
              h.label = entries_[i].label;
              return bof_to_tsv({h});
            });
      } catch (const StageError&) {
        throw;
      } catch (const std::exception& ex) {
        throw StageError("encode", clip_id(i), ex.what());
      }
    });
    std::string all;
    for (const auto& l : lines) all += l;
    atomic_write_file(cfg_.out_dir / ("bof-" + kind_tag(kind) + ".tsv"), all);
  }

  // stage 4: one-vs-one linear models on the training split
  void train(Kind kind) {
    try {
      const std::string bof_bytes =
          read_file_bytes(cfg_.out_dir / ("bof-" + kind_tag(kind) + ".tsv"));
      const uint64_t key = fnv1a64(
          bof_bytes,
          fnv1a64("train c=" + fmt_g17(cfg_.svm_c) +
                  " cv=" + std::to_string(cfg_.cv_c) +
                  " norm=" + std::to_string(cfg_.normalize)));
      model_path_[kind] =
          cache_dir() / ("model-" + kind_tag(kind) + "-" + hex16(key) + ".stvl");
      detail::cached(model_path_[kind], [&] {
        auto hists = bof_from_tsv(bof_bytes, "bof");
        std::vector<std::vector<double>> x;
        std::vector<std::string> labels;
        for (size_t i = 0; i < hists.size(); ++i) {
          if (!entries_[i].train) continue;
          x.push_back(cfg_.normalize ? hists[i].normalized() : hists[i].counts);
          labels.push_back(hists[i].label);
        }
        if (x.empty()) throw std::runtime_error("empty training split");
        double c = cfg_.svm_c;
        if (cfg_.cv_c)
          c = select_c(x, labels, {0.01, 0.1, 1.0, 10.0, 100.0}, 5,
                       cfg_.vocab_seed);
        return ovo_to_bytes(train_ovo(x, labels, c));
      });
      fs::copy_file(model_path_[kind],
                    cfg_.out_dir / ("model-" + kind_tag(kind) + ".stvl"),
                    fs::copy_options::overwrite_existing);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& ex) {
      throw StageError("train", "", ex.what());
    }
  }

  // stage 5: classify the test split
  EvalReport eval(Kind kind) {
    try {
      const std::string model_bytes = read_file_bytes(model_path_.at(kind));
      const std::string bof_bytes =
          read_file_bytes(cfg_.out_dir / ("bof-" + kind_tag(kind) + ".tsv"));
      auto hists = bof_from_tsv(bof_bytes, "bof");
      std::vector<std::vector<double>> x;
      std::vector<std::string> labels;
      for (size_t i = 0; i < hists.size(); ++i) {
        if (entries_[i].train) continue;
        x.push_back(cfg_.normalize ? hists[i].normalized() : hists[i].counts);
        labels.push_back(hists[i].label);
      }
      if (x.empty()) throw std::runtime_error("empty test split");

      const uint64_t key =
          fnv1a64(bof_bytes, fnv1a64(model_bytes, fnv1a64("eval")));
      const OvoModel model = ovo_from_bytes(model_bytes, "model");
      const std::string report_tsv = detail::cached(
          cache_dir() / ("report-" + kind_tag(kind) + "-" + hex16(key) + ".tsv"),
          [&] { return report_to_tsv(evaluate(model, x, labels)); });
      // reports are cheap; recompute the struct for the caller
      EvalReport rep = evaluate(model, x, labels);
      atomic_write_file(cfg_.out_dir / ("report-" + kind_tag(kind) + ".tsv"),
                        report_tsv);
      atomic_write_file(cfg_.out_dir / ("confusion-" + kind_tag(kind) + ".tsv"),
                        confusion_to_tsv(rep));
      return rep;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& ex) {
      throw StageError("eval", "", ex.what());
    }
  }

  // all five stages for every configured kind
  std::map<Kind, EvalReport> run() {
    write_run_config();
    extract();
    std::map<Kind, EvalReport> reports;
    for (Kind kind : cfg_.kinds) {
      build_vocab(kind);
      encode_clips(kind);
      train(kind);
      reports.emplace(kind, eval(kind));
    }
    if (reports.size() > 1) {
      std::vector<std::pair<std::string, const EvalReport*>> cols;
      for (const auto& [k, r] : reports) cols.emplace_back(kind_name(k), &r);
      atomic_write_file(cfg_.out_dir / "comparison.txt",
                        render_report_table(cols));
    }
    return reports;
  }

  fs::path cache_dir() const { return cfg_.out_dir / "cache"; }

  // conventions and knobs of this run, for reproducibility
  void write_run_config() const {
    std::string out;
    out += "detector: " + detail::detector_config_str(cfg_.detector) + "\n";
    out += "descriptor: " + detail::descriptor_config_str(cfg_.descriptor) + "\n";
    out += "kinds:";
    for (Kind k : cfg_.kinds) out += std::string(" ") + kind_name(k);
    out += "\nvocab: k=" + std::to_string(cfg_.vocab_k) +
           " seed=" + std::to_string(cfg_.vocab_seed) + "\n";
    out += "svm: c=" + fmt_g17(cfg_.svm_c) + " cv=" + std::to_string(cfg_.cv_c) +
           " normalize=" + std::to_string(cfg_.normalize) + "\n";
    out += "detect_per_kind: " + std::to_string(cfg_.detect_per_kind) + "\n";
    out += "luminance: " + fmt_g17(kLumR) + " " + fmt_g17(kLumG) + " " +
           fmt_g17(kLumB) + " (BT.601)\n";
    atomic_write_file(cfg_.out_dir / "run-config.txt", out);
  }

 private:
  std::string clip_id(size_t i) const {
    return entries_[i].resolved.filename().string();
  }
  static std::string kind_tag(Kind k) { return kind_name(k); }

  uint64_t clip_hash(size_t i) {
    uint64_t& h = clip_hash_[i];
    uint64_t v = h;
    if (v == 0) {
      v = detail::clip_content_hash(entries_[i].resolved);
      h = v;
    }
    return v;
  }

  fs::path points_file(size_t i, uint64_t chash, const Kind* kind = nullptr) {
    const std::string tag = kind ? std::string(kind_name(*kind)) + "-" : "";
    const uint64_t key = fnv1a64(
        "points " + tag + detail::detector_config_str(cfg_.detector), chash);
    return cache_dir() /
           ("points-" + tag + clip_id(i) + "-" + hex16(key) + ".tsv");
  }

  fs::path desc_file(size_t i, Kind kind, uint64_t chash) {
    const uint64_t key =
        fnv1a64("desc " + std::string(kind_name(kind)) + " " +
                    detail::detector_config_str(cfg_.detector) + " " +
                    detail::descriptor_config_str(cfg_.descriptor) +
                    (cfg_.detect_per_kind ? " perkind" : ""),
                chash);
    return cache_dir() /
           ("desc-" + kind_tag(kind) + "-" + clip_id(i) + "-" + hex16(key) +
            ".stvd");
  }

  Vocabulary load_vocab(Kind kind) {
    const auto it = vocab_path_.find(kind);
    if (it == vocab_path_.end())
      throw StageError("encode", "", "vocabulary not built");
    return vocabulary_from_bytes(read_file_bytes(it->second), "vocab");
  }

  PipelineConfig cfg_;
  std::vector<ManifestEntry> entries_;
  std::vector<uint64_t> clip_hash_;
  std::map<Kind, fs::path> vocab_path_;
  std::map<Kind, fs::path> model_path_;
};

}  // namespace stv
