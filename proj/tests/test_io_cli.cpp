#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "layer_checks.hpp"
#include "skillfuse/checkpoint.hpp"
#include "skillfuse/cli.hpp"

using namespace skillfuse;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("skillfuse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "skillfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Small enough for a few seconds per full pipeline.
nlohmann::json tiny_config() {
  return {{"seed", 5},
          {"synth", {{"n_subjects", 4}, {"trials_per_subject", 2}, {"duration_min_s", 20.0}, {"duration_max_s", 24.0}}},
          {"nnet", {{"conv_filters", 4}, {"se_reduction", 2}, {"max_epochs", 5}}},
          {"contrastive",
           {{"feature_dim", 8}, {"projection_dim", 8}, {"epochs", 2}, {"batch_size", 8}, {"max_training_frames", 40},
            {"augment", {{"crop_size", 12}}}}},
          {"assess", {{"iterations", 4}}}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const auto p = dir / "config.json";
  write_file_atomic(p, j.dump());
  return p;
}

}  // namespace

TEST_CASE("matrix CSV round trip is bit exact", "[io]") {
  Rng rng(1);
  Matrix m(7, 3);
  for (double& v : m.values()) v = rng.normal() * 1e-7 + rng.uniform();
  m(0, 0) = 0.1;
  m(1, 1) = -0.0;
  m(2, 2) = 1e300;
  const std::vector<std::string> names{"a", "b", "c"};
  const auto text = matrix_to_csv(names, m);
  REQUIRE(text.substr(0, 6) == "a,b,c\n");
  const auto back = matrix_from_csv(text);
  REQUIRE(back.names == names);
  REQUIRE(back.data == m);

  REQUIRE_THROWS_AS(matrix_from_csv("a,b\n1,2\n3\n"), io_error);
  REQUIRE_THROWS_AS(matrix_from_csv("a\nx\n"), io_error);
  REQUIRE_THROWS_AS(matrix_from_csv(""), io_error);
  REQUIRE_THROWS_AS(matrix_to_csv(std::vector<std::string>{"a,b", "c", "d"}, m), std::invalid_argument);
}

TEST_CASE("manifest header and round trip", "[io]") {
  const std::vector<ManifestRow> rows{
      {"s1_t1", "s1", Task::pattern_cutting, 1, 212.5, "neural/s1_t1.csv", "motor/s1_t1.csv", 7.8125, 30},
      {"s2_t1", "s2", Task::suturing, 0, 17.25, "neural/s2_t1.csv", "frames/s2_t1.frames", 5.0863, 1}};
  const auto text = manifest_to_csv(rows);
  REQUIRE(text.substr(0, text.find('\n')) ==
          "trial_id,subject_id,task,label,score,neural_path,motor_path,neural_fs_hz,motor_fps");
  const auto back = manifest_from_csv(text);
  REQUIRE(back.size() == 2);
  REQUIRE(back[1].task == Task::suturing);
  REQUIRE(back[1].motor_path == "frames/s2_t1.frames");
  REQUIRE(back[0].neural_fs_hz == 7.8125);
  REQUIRE(manifest_to_csv(back) == text);

  REQUIRE_THROWS_AS(manifest_from_csv("trial_id,subject_id\n"), io_error);
  REQUIRE_THROWS_AS(manifest_from_csv(std::string(kManifestHeader) + "\nx,s1,pattern_cutting,2,1,a,b,1,1\n"), io_error);
  REQUIRE_THROWS_AS(manifest_from_csv(std::string(kManifestHeader) + "\nx,s1,knitting,1,1,a,b,1,1\n"), io_error);
}

TEST_CASE("intensity CSV keeps channels and wavelengths", "[io]") {
  SynthConfig sc;
  sc.n_subjects = 2;
  sc.trials_per_subject = 1;
  sc.duration_min_s = sc.duration_max_s = 12;
  const auto trial = generate_dataset(sc).front();
  const auto back = intensities_from_csv(matrix_from_csv(intensities_to_csv(trial.neural)), sc.fs_neural);
  REQUIRE(back.size() == trial.neural.size());
  for (std::size_t c = 0; c < back.size(); ++c) {
    REQUIRE(back[c].channel_id == trial.neural[c].channel_id);
    REQUIRE(back[c].wavelengths_nm == trial.neural[c].wavelengths_nm);
    REQUIRE(back[c].samples == trial.neural[c].samples);
  }
}

TEST_CASE("frame blobs and PPM directories", "[io][frames]") {
  Rng rng(2);
  auto frames = render_motion_frames(0.5, 5, 10, rng);
  REQUIRE(frames.size() == 5);

  const auto blob = frames_to_blob(frames);
  REQUIRE(blob.substr(0, 8) == "SKFRAMES");
  REQUIRE(blob.size() == 8 + 4 + 4 + 4 * 8 + 5 * 10 * 10 * 3 * 8);
  REQUIRE(frames_from_blob(blob) == frames);

  const auto small = frames_from_blob(frames_to_blob(frames, FrameDtype::uint8));
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (std::size_t i = 0; i < frames[t].pixels.size(); ++i)
      REQUIRE(std::abs(small[t].pixels[i] - frames[t].pixels[i]) <= 0.5 / 255 + 1e-12);

  REQUIRE_THROWS_AS(frames_from_blob("NOTFRAME"), io_error);
  REQUIRE_THROWS_AS(frames_from_blob(blob.substr(0, blob.size() - 1)), io_error);
  auto bad_dims = blob;
  bad_dims[8 + 4 + 4 + 3 * 8] = 4;  // C = 4
  REQUIRE_THROWS_AS(frames_from_blob(bad_dims), io_error);

  const auto dir = fresh_dir("ppm");
  write_frame_directory(dir / "seq", frames);
  const auto read = read_frame_directory(dir / "seq");
  REQUIRE(read.size() == frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) REQUIRE(read[t] == frames_from_blob(frames_to_blob(std::span(frames).subspan(t, 1), FrameDtype::uint8)).front());

  // directory order is lexicographic, not creation order
  write_file_atomic(dir / "lex" / "b.ppm", frame_to_ppm(Frame(8, 8, 1.0)));
  write_file_atomic(dir / "lex" / "a.ppm", frame_to_ppm(Frame(8, 8, 0.0)));
  const auto lex = read_frames(dir / "lex");
  REQUIRE(lex[0].pixels[0] == 0.0);
  REQUIRE(lex[1].pixels[0] == 1.0);

  const std::string ascii = "P3\n# comment\n8 8\n255\n" + [] {
    std::string s;
    for (int i = 0; i < 8 * 8 * 3; ++i) s += "51 ";
    return s;
  }();
  REQUIRE(frame_from_ppm(ascii).pixels[5] == 0.2);
  REQUIRE_THROWS_AS(frame_from_ppm("P6\n4 4\n255\n" + std::string(48, 'x')), std::invalid_argument);
}

TEST_CASE("atomic writes leave no temp files", "[io]") {
  const auto dir = fresh_dir("atomic");
  write_file_atomic(dir / "sub" / "x.txt", "one");
  write_file_atomic(dir / "sub" / "x.txt", "two");
  REQUIRE(read_file(dir / "sub" / "x.txt") == "two");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++n;
  REQUIRE(n == 1);
}

TEST_CASE("run configuration is strict and fully materialized", "[config]") {
  const RunConfig defaults;
  const auto j = run_config_to_json(defaults);
  REQUIRE(run_config_to_json(run_config_from_json(j)) == j);
  REQUIRE(run_config_to_json(run_config_from_json(nlohmann::json::object())) == j);
  REQUIRE(j["assess"]["iterations"] == 100);
  REQUIRE(j["nnet"]["patience"] == 10);

  REQUIRE_THROWS_AS(run_config_from_json({{"sed", 1}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"nnet", {{"filters", 8}}}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"nnet", {{"kernel", "3"}}}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"nnet", {{"kernel", -3}}}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"nnet", {{"kernel", 4}}}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"assess", {{"iterations", 1}}}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"modality", "audio"}}), config_error);
  REQUIRE_THROWS_AS(run_config_from_json({{"synth", 3}}), config_error);

  const auto sut = run_config_from_json({{"task", "suturing"}});
  REQUIRE(sut.synth.channels_neural == 8);
  REQUIRE(sut.synth.fs_neural == kSuturingFsHz);
  REQUIRE(run_config_from_json({{"task", "suturing"}, {"synth", {{"channels_neural", 4}}}}).synth.channels_neural == 4);
}

TEST_CASE("dispatch exit codes", "[cli]") {
  const auto help = run({"--help"});
  REQUIRE(help.code == 0);
  REQUIRE(help.out.find("assess") != std::string::npos);
  REQUIRE(help.err.empty());

  REQUIRE(run({}).code == 2);
  const auto unknown = run({"dance"});
  REQUIRE(unknown.code == 2);
  REQUIRE_FALSE(unknown.err.empty());
  REQUIRE(run({"assess", "--bogus"}).code == 2);
  REQUIRE(run({"assess", "--modality", "audio"}).code == 2);

  const auto dir = fresh_dir("exit");
  REQUIRE(run({"assess", "--out", dir.string()}).code == 2);  // no manifest configured
  write_file_atomic(dir / "bad.json", R"({"nnet": {"width": 3}})");
  const auto bad = run({"synth", "--config", (dir / "bad.json").string(), "--out", dir.string()});
  REQUIRE(bad.code == 2);
  REQUIRE(bad.err.find("nnet.width") != std::string::npos);
  write_file_atomic(dir / "broken.json", "{");
  REQUIRE(run({"synth", "--config", (dir / "broken.json").string()}).code == 2);
  REQUIRE(run({"assess", "--data", (dir / "missing.csv").string(), "--out", dir.string()}).code == 1);
  REQUIRE(run({"compare", "--out", dir.string(), "only_one.csv"}).code == 2);
}

TEST_CASE("end-to-end pipeline through the command line", "[cli][e2e]") {
  const auto root = fresh_dir("e2e");
  const auto cfg = write_config(root, tiny_config()).string();
  const auto raw = root / "raw", prep = root / "prep";

  REQUIRE(run({"synth", "--config", cfg, "--out", raw.string()}).code == 0);
  const auto manifest = read_manifest(raw / "manifest.csv");
  REQUIRE(manifest.size() == 8);
  for (const auto& r : manifest) {
    REQUIRE(fs::exists(raw / r.neural_path));
    REQUIRE(fs::exists(raw / r.motor_path));
  }
  REQUIRE(fs::exists(raw / "run_config.json"));
  const auto materialized = nlohmann::json::parse(read_file(raw / "run_config.json"));
  REQUIRE(materialized["synth"]["n_subjects"] == 4);
  REQUIRE(materialized["nnet"]["kernel"] == 3);

  // same config and seed, bit-identical files
  REQUIRE(run({"synth", "--config", cfg, "--out", (root / "raw2").string()}).code == 0);
  REQUIRE(read_file(raw / "neural/s2_t1.csv") == read_file(root / "raw2/neural/s2_t1.csv"));
  REQUIRE(read_file(raw / "manifest.csv") == read_file(root / "raw2/manifest.csv"));

  REQUIRE(run({"preprocess", "--config", cfg, "--data", (raw / "manifest.csv").string(), "--out", prep.string()}).code == 0);
  const auto trials = cli::load_prepared(prep / "manifest.csv");
  REQUIRE(trials.size() == 8);
  REQUIRE(trials[0].neural.sample_rate_hz == 1.0);
  REQUIRE(trials[0].neural.channels() == 6);
  REQUIRE(trials[0].motor.channels() == 6);

  const std::string pm = (prep / "manifest.csv").string();
  const auto a1 = root / "assess1", a2 = root / "assess2";
  REQUIRE(run({"assess", "--config", cfg, "--data", pm, "--out", a1.string()}).code == 0);
  REQUIRE(run({"assess", "--config", (a1 / "run_config.json").string(), "--out", a2.string(), "--jobs", "1"}).code == 0);
  for (const char* f : {"assess.json", "distribution_accuracy.csv", "distribution_nts_pass.csv"})
    REQUIRE(read_file(a1 / f) == read_file(a2 / f));
  const auto aj = nlohmann::json::parse(read_file(a1 / "assess.json"));
  REQUIRE(aj["iterations"].size() == 4);
  REQUIRE(aj["iterations"][0]["predictions"].size() == 8);
  REQUIRE(aj["config"]["seed"] == 5);

  const auto dist_a = (root / "dist_a.csv").string(), dist_b = (root / "dist_b.csv").string();
  write_file_atomic(dist_a, "iteration,metric\n0,0.61\n1,0.64\n2,0.58\n3,0.66\n4,0.63\n5,0.6\n");
  write_file_atomic(dist_b, "iteration,metric\n0,0.62\n1,0.59\n2,0.65\n3,0.6\n4,0.64\n5,0.61\n");
  REQUIRE(run({"compare", "--out", (root / "cmp").string(), dist_a, dist_b}).code == 0);
  const auto cmp = nlohmann::json::parse(read_file(root / "cmp/compare.json"));
  REQUIRE(cmp["report"]["significant"] == false);

  REQUIRE(run({"trust", "--out", (root / "trust").string(), (a1 / "assess.json").string()}).code == 0);
  const auto tj = nlohmann::json::parse(read_file(root / "trust/trust.json"));
  REQUIRE(tj["density_variant"] == "all_predictions");
  REQUIRE(tj["nts"].contains("nts_pass"));
  REQUIRE(run({"trust", "--correct-only", "--out", (root / "trust_c").string(), (a1 / "assess.json").string()}).code == 0);
  REQUIRE(nlohmann::json::parse(read_file(root / "trust_c/trust.json"))["density_variant"] == "correct_only");

  REQUIRE(run({"train", "--config", cfg, "--data", pm, "--out", (root / "model").string()}).code == 0);
  const auto model = (root / "model/model.json").string();
  const auto trained = model_from_json(nlohmann::json::parse(read_file(model)));
  for (const auto& t : trials) REQUIRE(checks::cam_identity_error(trained, model_input(t, Modality::fused).data) < 1e-9);
  REQUIRE(run({"cam", "--config", cfg, "--data", pm, "--model", model, "--out", (root / "cam").string()}).code == 0);
  const auto cam = cli::read_cam_table(root / "cam/cam.csv");
  REQUIRE(cam.ids.size() == 9);
  REQUIRE(cam.ids.back() == "mean");
  REQUIRE(cam.curves.back().size() == 100);
  REQUIRE(run({"cam", "--config", cfg, "--data", pm, "--model", model, "--out", (root / "cam2").string(), "--against",
               (root / "cam/cam.csv").string()})
              .code == 0);
  const auto cj = nlohmann::json::parse(read_file(root / "cam2/cam.json"));
  REQUIRE(cj["interpretation_limited"] == true);
  if (!cj["rho_mean_curves"].is_null()) REQUIRE(cj["rho_mean_curves"].get<double>() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(run({"cam", "--config", cfg, "--data", pm, "--model", model, "--modality", "neural", "--out",
               (root / "cam3").string()})
              .code == 1);  // channel count differs from the fused model

  REQUIRE(run({"report", "--out", (root / "report").string(), a1.string(), (root / "cmp").string()}).code == 0);
  const auto rj = nlohmann::json::parse(read_file(root / "report/report.json"));
  REQUIRE(rj["assessments"].size() == 1);
  REQUIRE(rj["comparisons"].size() == 1);
  REQUIRE(fs::exists(root / "report/summary.csv"));
  REQUIRE(read_file(root / "report/distributions.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("frame-rendered motor stream through the command line", "[cli][frames]") {
  const auto root = fresh_dir("frames");
  auto j = tiny_config();
  j["synth"]["frames"] = {{"render", true}, {"size", 16}};
  const auto cfg = write_config(root, j).string();
  REQUIRE(run({"synth", "--config", cfg, "--out", (root / "raw").string()}).code == 0);
  const auto rows = read_manifest(root / "raw/manifest.csv");
  REQUIRE(rows.front().motor_fps == 1.0);
  REQUIRE(fs::path(rows.front().motor_path).extension() == ".frames");
  const auto frames = read_frames(root / "raw" / rows.front().motor_path);
  REQUIRE(frames.front().height == 16);

  REQUIRE(run({"preprocess", "--config", cfg, "--data", (root / "raw/manifest.csv").string(), "--out",
               (root / "prep").string()})
              .code == 0);
  REQUIRE(fs::exists(root / "prep/backbone.json"));
  const auto trials = cli::load_prepared(root / "prep/manifest.csv");
  REQUIRE(trials.front().motor.channels() == 6);
  REQUIRE(trials.front().motor.length() == frames.size());
}
