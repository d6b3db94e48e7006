#include <catch2/catch.hpp>
#include <filesystem>
#include <map>

#include "stv/pipeline.hpp"
#include "stv/synthgen.hpp"

using namespace stv;
namespace fsys = std::filesystem;

namespace {

struct MiniDataset {
  fsys::path dir;
  PipelineConfig cfg;
};

// small 4-class dataset + a pipeline configuration sized for unit tests
MiniDataset make_mini(const std::string& name) {
  MiniDataset md;
  md.dir = fsys::temp_directory_path() / ("stv_test_pipe_" + name);
  fsys::remove_all(md.dir);
  const SynthDataset ds =
      color_action_dataset(4, default_color_action_classes(), 11, 48, 48, 24);
  write_dataset(ds, md.dir / "data");

  md.cfg.manifest = md.dir / "data" / "manifest.tsv";
  md.cfg.out_dir = md.dir / "out";
  md.cfg.detector.scales = {{4, 2}};
  md.cfg.detector.threshold = 1e-12;
  md.cfg.detector.top_n = 12;
  md.cfg.vocab_k = 16;
  md.cfg.vocab_seed = 5;
  md.cfg.jobs = 0;
  return md;
}

std::map<fsys::path, std::string> snapshot(const fsys::path& dir) {
  std::map<fsys::path, std::string> out;
  for (const auto& e : fsys::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[e.path()] = read_file_bytes(e.path());
  return out;
}

}  // namespace

TEST_CASE("pipeline end to end, rerun determinism, stage isolation",
          "[pipeline]") {
  MiniDataset md = make_mini("e2e");

  Pipeline pipe(md.cfg);
  const auto reports = pipe.run();
  REQUIRE(reports.size() == 2);
  for (const auto& [kind, rep] : reports) {
    REQUIRE(rep.classes.size() == 4);
    long total = 0;
    for (long s : rep.support) total += s;
    REQUIRE(total == 8);  // 2 test clips per class
  }
  REQUIRE(fsys::exists(md.cfg.out_dir / "report-hoghof.tsv"));
  REQUIRE(fsys::exists(md.cfg.out_dir / "report-huestip.tsv"));
  REQUIRE(fsys::exists(md.cfg.out_dir / "comparison.txt"));

  const auto before = snapshot(md.cfg.out_dir);

  // rerun: pure cache hits, byte-identical outputs
  Pipeline pipe2(md.cfg);
  pipe2.run();
  REQUIRE(snapshot(md.cfg.out_dir) == before);

  // delete one cached artifact; rerun reproduces it bit-exactly
  fsys::path victim;
  for (const auto& e : fsys::directory_iterator(pipe2.cache_dir()))
    if (e.path().filename().string().rfind("desc-huestip-", 0) == 0) {
      victim = e.path();
      break;
    }
  REQUIRE_FALSE(victim.empty());
  fsys::remove(victim);
  Pipeline pipe3(md.cfg);
  pipe3.run();
  REQUIRE(snapshot(md.cfg.out_dir) == before);
}

TEST_CASE("pipeline failures name the stage", "[pipeline]") {
  MiniDataset md = make_mini("err");

  // all clips train: step 5 has nothing to classify
  auto entries = read_manifest(md.cfg.manifest);
  for (auto& e : entries) e.train = true;
  write_manifest(md.cfg.manifest, entries);

  Pipeline pipe(md.cfg);
  try {
    pipe.run();
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    REQUIRE(std::string(e.what()).find("eval") != std::string::npos);
  }

  // vocabulary larger than the descriptor stream fails in the vocab stage
  MiniDataset big = make_mini("bigk");
  big.cfg.vocab_k = 100000;
  Pipeline pipe2(big.cfg);
  try {
    pipe2.run();
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    REQUIRE(std::string(e.what()).find("vocab") != std::string::npos);
  }
}

TEST_CASE("extraction handles y4m clips through the manifest", "[pipeline]") {
  const fsys::path dir = fsys::temp_directory_path() / "stv_test_pipe_y4m";
  fsys::remove_all(dir);
  fsys::create_directories(dir);

  // static gray stream: extraction must run and find nothing
  std::string y4m = "YUV4MPEG2 W32 H32 F25:1 C444\n";
  for (int f = 0; f < 20; ++f) {
    y4m += "FRAME\n";
    y4m.append(32 * 32, char(126));
    y4m.append(2 * 32 * 32, char(128));
  }
  atomic_write_file(dir / "still.y4m", y4m);
  std::vector<ManifestEntry> entries(1);
  entries[0].clip_path = "still.y4m";
  entries[0].label = "none";
  entries[0].train = true;
  write_manifest(dir / "manifest.tsv", entries);

  PipelineConfig cfg;
  cfg.manifest = dir / "manifest.tsv";
  cfg.out_dir = dir / "out";
  cfg.detector.scales = {{4, 2}};
  Pipeline pipe(cfg);
  pipe.extract();

  int point_files = 0;
  for (const auto& e : fsys::directory_iterator(pipe.cache_dir()))
    if (e.path().filename().string().rfind("points-still.y4m-", 0) == 0) {
      ++point_files;
      REQUIRE(read_file_bytes(e.path()).empty());
    }
  REQUIRE(point_files == 1);
}

TEST_CASE("worker count does not affect output bytes; CV-C path runs",
          "[pipeline]") {
  MiniDataset a = make_mini("jobs_a");
  a.cfg.jobs = 1;
  Pipeline pa(a.cfg);
  const auto ra = pa.run();

  MiniDataset b = make_mini("jobs_b");
  b.cfg.jobs = 4;
  Pipeline pb(b.cfg);
  const auto rb = pb.run();

  for (const char* name : {"report-hoghof.tsv", "report-huestip.tsv",
                           "bof-hoghof.tsv", "comparison.txt"})
    REQUIRE(read_file_bytes(a.cfg.out_dir / name) ==
            read_file_bytes(b.cfg.out_dir / name));

  MiniDataset cv = make_mini("cvc");
  cv.cfg.cv_c = true;
  cv.cfg.kinds = {Kind::HoGHoF};
  Pipeline pc(cv.cfg);
  const auto rc = pc.run();
  REQUIRE(rc.at(Kind::HoGHoF).classes.size() == 4);
}

TEST_CASE("per-kind detection keeps separate point caches", "[pipeline]") {
  MiniDataset md = make_mini("perkind");
  md.cfg.detect_per_kind = true;
  Pipeline pipe(md.cfg);
  const auto reports = pipe.run();
  REQUIRE(reports.size() == 2);

  int shared = 0, hoghof = 0, huestip = 0;
  for (const auto& e : fsys::directory_iterator(pipe.cache_dir())) {
    const std::string name = e.path().filename().string();
    if (name.rfind("points-hoghof-", 0) == 0) ++hoghof;
    else if (name.rfind("points-huestip-", 0) == 0) ++huestip;
    else if (name.rfind("points-", 0) == 0) ++shared;
  }
  REQUIRE(shared == 0);
  REQUIRE(hoghof == 16);
  REQUIRE(huestip == 16);

  // identical detector config: both passes see the same grayscale input,
  // so the reports agree with the shared-pass run
  MiniDataset ref = make_mini("perkind_ref");
  Pipeline rpipe(ref.cfg);
  const auto rref = rpipe.run();
  for (Kind k : {Kind::HoGHoF, Kind::HueSTIP})
    REQUIRE(reports.at(k).confusion == rref.at(k).confusion);
}

TEST_CASE("a missing clip aborts extraction naming the clip", "[pipeline]") {
  MiniDataset md = make_mini("missing");
  auto entries = read_manifest(md.cfg.manifest);
  fsys::remove_all(entries[2].resolved);
  Pipeline pipe(md.cfg);
  try {
    pipe.extract();
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    const std::string what = e.what();
    REQUIRE(what.find("extract") != std::string::npos);
    REQUIRE(what.find(entries[2].resolved.filename().string()) !=
            std::string::npos);
  }

  // partial caches stay valid: restore the clip and resume
  const size_t cached_before =
      std::distance(fsys::directory_iterator(pipe.cache_dir()),
                    fsys::directory_iterator{});
  REQUIRE(cached_before > 0);
  const SynthDataset ds =
      color_action_dataset(4, default_color_action_classes(), 11, 48, 48, 24);
  write_dataset(ds, md.dir / "data");
  Pipeline resumed(md.cfg);
  REQUIRE_NOTHROW(resumed.run());
}
