#pragma once

// Command-line front end: synth, preprocess, train, assess, compare, trust,
// cam and report. dispatch() returns 0 on success, 1 on a runtime failure and
// 2 on a usage or configuration error.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "skillfuse/assess.hpp"
#include "skillfuse/checkpoint.hpp"
#include "skillfuse/config.hpp"
#include "skillfuse/explain.hpp"
#include "skillfuse/io.hpp"
#include "skillfuse/pipeline.hpp"
#include "skillfuse/report.hpp"
#include "skillfuse/stats.hpp"
#include "skillfuse/synth.hpp"
#include "skillfuse/trust.hpp"

namespace skillfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> iterations;
  std::optional<std::string> modality, task, head;
  bool correct_only = false;
  std::string data;
  std::string model;
  std::string against;
  std::vector<std::string> inputs;
};

struct Context {
  RunConfig config;
  fs::path out;
  std::ostream& log;
};

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, json_text(j)); }

// Flag overrides are applied to the JSON document so they pass the same
// validation as file settings.
inline RunConfig resolve_config(const Options& o, const std::string& command) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    try {
      j = nlohmann::json::parse(read_file(o.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw config_error(o.config_path + ": " + e.what());
    } catch (const io_error& e) {
      throw config_error(e.what());
    }
    if (!j.is_object()) throw config_error(o.config_path + ": top level must be an object");
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.task) j["task"] = *o.task;
  if (o.modality) j["modality"] = *o.modality;
  if (o.head) j["head"] = *o.head;
  if (o.iterations) j["assess"]["iterations"] = *o.iterations;
  if (o.jobs) j["assess"]["jobs"] = *o.jobs;
  if (o.correct_only) j["trust"]["correct_only"] = true;
  if (!o.model.empty()) j["data"]["model"] = o.model;
  if (!o.data.empty()) j["data"][command == "preprocess" ? "raw_manifest" : "prepared_manifest"] = o.data;
  return run_config_from_json(j);
}

inline const std::string& require_path(const std::string& p, const char* what) {
  if (p.empty()) throw config_error(std::string("no ") + what + " given (use --data or the config file)");
  return p;
}

// Trials of a prepared manifest, already aligned and normalized.
inline std::vector<TrialRecord> load_prepared(const fs::path& manifest) {
  const auto rows = read_manifest(manifest);
  if (rows.empty()) throw io_error(manifest.string() + ": no trials");
  const auto dir = manifest.parent_path();
  std::vector<TrialRecord> trials;
  for (const auto& r : rows) {
    TrialRecord t;
    t.trial_id = r.trial_id;
    t.subject_id = r.subject_id;
    t.task = r.task;
    t.label = r.label;
    t.score = r.score;
    auto n = read_matrix_csv(dir / r.neural_path);
    auto m = read_matrix_csv(dir / r.motor_path);
    t.neural = {std::move(n.data), r.neural_fs_hz, std::move(n.names), Modality::neural};
    t.motor = {std::move(m.data), r.motor_fps, std::move(m.names), Modality::motor};
    t.neural.validate();
    t.motor.validate();
    trials.push_back(std::move(t));
  }
  return trials;
}

inline int cmd_synth(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto sc = cfg.synth_config();
  const auto trials = generate_dataset(sc);
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& tr = trials[i];
    ManifestRow row{tr.trial_id, tr.subject_id, tr.task, tr.label, tr.score, "neural/" + tr.trial_id + ".csv", "",
                    sc.fs_neural, sc.fs_motor};
    write_file_atomic(ctx.out / row.neural_path, intensities_to_csv(tr.neural));
    if (cfg.frames.render) {
      Rng frame_rng(derive_seed(cfg.seed, 0xF7A3E000ULL + i));
      const double duration = static_cast<double>(tr.motor.length()) / sc.fs_motor;
      const auto frames = render_motion_frames(tr.motor_drive, duration, cfg.frames.size, frame_rng);
      row.motor_path = "frames/" + tr.trial_id + std::string(kFrameBlobExtension);
      row.motor_fps = 1.0;
      write_file_atomic(ctx.out / row.motor_path, frames_to_blob(frames));
    } else {
      row.motor_path = "motor/" + tr.trial_id + ".csv";
      write_matrix_csv(ctx.out / row.motor_path, tr.motor.channel_names, tr.motor.data);
    }
    rows.push_back(std::move(row));
  }
  write_manifest(ctx.out / "manifest.csv", rows);
  ctx.log << "synth: " << rows.size() << " trials written to " << ctx.out.string() << "\n";
  return kExitOk;
}

inline nlohmann::json backbone_json(const Backbone& b) {
  return {{"format", "skillfuse-backbone"},
          {"parameters", b.parameters},
          {"train_history", b.train_history},
          {"val_history", b.val_history},
          {"initial_val_loss", b.initial_val_loss},
          {"best_epoch", b.best_epoch}};
}

inline int cmd_preprocess(Context& ctx) {
  const auto& cfg = ctx.config;
  const fs::path manifest = require_path(cfg.data.raw_manifest, "raw manifest");
  const auto rows = read_manifest(manifest);
  if (rows.empty()) throw io_error(manifest.string() + ": no trials");
  const auto dir = manifest.parent_path();

  // Frame sources share one backbone trained on frames pooled over all trials.
  std::optional<Backbone> backbone;
  std::map<std::string, std::vector<Frame>> frames;
  for (const auto& r : rows)
    if (is_frame_source(dir / r.motor_path)) frames[r.trial_id] = read_frames(dir / r.motor_path);
  if (!frames.empty()) {
    std::vector<Frame> pool;
    for (const auto& r : rows)
      if (frames.count(r.trial_id)) pool.insert(pool.end(), frames[r.trial_id].begin(), frames[r.trial_id].end());
    const std::size_t cap = cfg.frames.max_training_frames;
    if (cap > 0 && pool.size() > cap) {
      std::vector<Frame> sub;
      for (std::size_t k = 0; k < cap; ++k) sub.push_back(pool[k * pool.size() / cap]);
      pool = std::move(sub);
    }
    ctx.log << "preprocess: training frame backbone on " << pool.size() << " frames\n";
    backbone = train_contrastive(pool, cfg.backbone_config());
    write_json(ctx.out / "backbone.json", backbone_json(*backbone));
  }

  std::vector<ManifestRow> out_rows;
  for (const auto& r : rows) {
    const auto channels = intensities_from_csv(read_matrix_csv(dir / r.neural_path), r.neural_fs_hz);
    const auto neural = preprocess_neural(channels, cfg.preprocess);
    SpatioTemporalMatrix raw_motor;
    if (frames.count(r.trial_id)) {
      raw_motor = motor_from_frames(*backbone, frames[r.trial_id], r.motor_fps);
    } else {
      auto m = read_matrix_csv(dir / r.motor_path);
      raw_motor = {std::move(m.data), r.motor_fps, std::move(m.names), Modality::motor};
    }
    const std::size_t groups = cfg.preprocess.motor_groups ? cfg.preprocess.motor_groups : neural.channels();
    const auto motor = preprocess_motor(raw_motor, std::min(groups, raw_motor.channels()), cfg.preprocess);
    ManifestRow o = r;
    o.neural_path = "neural/" + r.trial_id + ".csv";
    o.motor_path = "motor/" + r.trial_id + ".csv";
    o.neural_fs_hz = neural.sample_rate_hz;
    o.motor_fps = motor.sample_rate_hz;
    write_matrix_csv(ctx.out / o.neural_path, neural.channel_names, neural.data);
    write_matrix_csv(ctx.out / o.motor_path, motor.channel_names, motor.data);
    out_rows.push_back(std::move(o));
  }
  write_manifest(ctx.out / "manifest.csv", out_rows);
  ctx.log << "preprocess: " << out_rows.size() << " trials written to " << ctx.out.string() << "\n";
  return kExitOk;
}

inline int cmd_train(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto trials = load_prepared(require_path(cfg.data.prepared_manifest, "prepared manifest"));
  std::vector<TrainingExample> examples;
  for (const auto& t : trials) examples.push_back(training_example(t, cfg.modality, cfg.head));
  const auto model = train(cfg.net_config(examples.front().x.cols()), examples);
  write_json(ctx.out / "model.json", model_to_json(model));
  Matrix hist(model.history.size(), 2);
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    hist(e, 0) = static_cast<double>(e);
    hist(e, 1) = model.history[e];
  }
  write_matrix_csv(ctx.out / "training_history.csv", std::vector<std::string>{"epoch", "loss"}, hist);
  ctx.log << "train: " << model.history.size() << " epochs, best epoch " << model.best_epoch << "\n";
  return kExitOk;
}

inline void write_distribution_csv(const fs::path& path, const std::string& metric, std::span<const double> values,
                                   std::uint64_t master_seed) {
  Matrix m(values.size(), 3);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = static_cast<double>(master_seed + i);
    m(i, 2) = values[i];
  }
  write_matrix_csv(path, std::vector<std::string>{"iteration", "seed", metric}, m);
}

inline std::string class_slug(Task task, int cls) {
  std::string s(class_name(task, cls));
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline int cmd_assess(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto trials = load_prepared(require_path(cfg.data.prepared_manifest, "prepared manifest"));
  const Task task = trials.front().task;
  const std::size_t channels = model_input(trials.front(), cfg.modality).channels();
  const auto runs =
      repeat_runs(trials, cfg.modality, cfg.head, nnet_learner(cfg.net_config(channels)), cfg.iterations, cfg.seed, cfg.jobs);
  const auto dist = metric_distribution(runs, cfg.modality, task);

  nlohmann::json j;
  j["config"] = run_config_to_json(cfg);
  j["task"] = std::string(to_string(task));
  j["modality"] = std::string(to_string(cfg.modality));
  j["head"] = std::string(to_string(cfg.head));
  j["metric"] = dist.metric;
  j["pooling"] = "micro: predictions pooled over all folds";
  j["subjects"] = louo_folds(trials).size();
  j["trials"] = trials.size();
  j["summary"] = sample_summary(dist.values);
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& r : runs)
    iters.push_back({{"seed", r.seed}, {"metric", r.metric}, {"predictions", predictions_json(r.predictions, r.head)}});
  j["iterations"] = iters;
  write_distribution_csv(ctx.out / ("distribution_" + dist.metric + ".csv"), dist.metric, dist.values, cfg.seed);

  if (cfg.head == HeadKind::classify) {
    nlohmann::json nts;
    for (bool correct_only : {false, true}) {
      for (const auto& [cls, d] : nts_distributions(runs, cfg.modality, task, correct_only)) {
        const std::string key = "nts_" + class_slug(task, cls) + (correct_only ? "_correct_only" : "");
        nts[key] = sample_summary(d.values);
        write_distribution_csv(ctx.out / ("distribution_" + key + ".csv"), key, d.values, cfg.seed);
      }
    }
    j["nts"] = nts;
  }
  write_json(ctx.out / "assess.json", j);
  ctx.log << "assess: " << to_string(cfg.modality) << " " << dist.metric << " "
          << j["summary"]["all"]["mean_pm_std"].get<std::string>() << " over " << runs.size() << " iterations\n";
  return kExitOk;
}

struct DistributionFile {
  std::string metric;
  std::vector<double> values;
};

inline DistributionFile read_distribution(const fs::path& p) {
  const auto nm = read_matrix_csv(p);
  if (nm.names.empty() || nm.data.rows() == 0) throw io_error(p.string() + ": empty distribution");
  return {nm.names.back(), nm.data.col(nm.data.cols() - 1)};
}

inline int cmd_compare(Context& ctx, const Options& o) {
  if (o.inputs.size() != 2) throw config_error("compare needs exactly two distribution files");
  const auto a = read_distribution(o.inputs[0]);
  const auto b = read_distribution(o.inputs[1]);
  const auto rep = significance_test(a.values, b.values);
  nlohmann::json j{{"a", {{"file", fs::path(o.inputs[0]).filename().string()}, {"metric", a.metric},
                          {"summary", sample_summary(a.values)}}},
                   {"b", {{"file", fs::path(o.inputs[1]).filename().string()}, {"metric", b.metric},
                          {"summary", sample_summary(b.values)}}},
                   {"report", stat_report_json(rep)}};
  write_json(ctx.out / "compare.json", j);
  ctx.log << "compare: " << to_string(rep.test_used) << " p=" << rep.p_value << " "
          << (rep.significant ? "significant" : "not significant") << " (" << to_string(rep.direction) << ")\n";
  return kExitOk;
}

inline nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(p.string() + ": " + e.what());
  }
}

inline int cmd_trust(Context& ctx, const Options& o) {
  if (o.inputs.size() != 1) throw config_error("trust needs one assess.json file");
  const auto j = read_json(o.inputs[0]);
  if (j.at("head") != "classify") throw std::invalid_argument("trust: needs a classification assessment");
  const Task task = parse_task(j.at("task").get<std::string>());
  const bool correct_only = ctx.config.correct_only;

  std::vector<PredictionRecord> pooled;
  std::map<std::string, std::vector<double>> per_iteration;
  for (const auto& it : j.at("iterations")) {
    const auto recs = prediction_records_from_json(it.at("predictions"));
    pooled.insert(pooled.end(), recs.begin(), recs.end());
    for (bool co : {false, true})
      for (const auto& [cls, v] : net_trust_score(recs, co))
        per_iteration["nts_" + class_slug(task, cls) + (co ? "_correct_only" : "")].push_back(v);
  }
  const auto spectrum = trust_spectrum(pooled, correct_only);

  nlohmann::json out;
  out["source"] = fs::path(o.inputs[0]).filename().string();
  out["modality"] = j.at("modality");
  out["task"] = j.at("task");
  out["density_variant"] = correct_only ? "correct_only" : "all_predictions";
  for (const auto& [k, v] : per_iteration) out["nts"][k] = sample_summary(v);
  for (const auto& [cls, v] : spectrum.nts) out["pooled_nts"][class_slug(task, cls)] = v;

  std::vector<std::string> names{"trust"};
  std::vector<ChartSeries> series;
  std::vector<const DensityCurve*> curves;
  for (const auto& [cls, d] : spectrum.densities) {
    names.push_back(class_slug(task, cls));
    series.push_back({std::string(class_name(task, cls)), d.grid, d.density});
    curves.push_back(&d);
  }
  if (!curves.empty()) {
    Matrix m(curves.front()->grid.size(), names.size());
    for (std::size_t g = 0; g < m.rows(); ++g) {
      m(g, 0) = curves.front()->grid[g];
      for (std::size_t k = 0; k < curves.size(); ++k) m(g, k + 1) = curves[k]->density[g];
    }
    write_matrix_csv(ctx.out / "trust_density.csv", names, m);
    write_file_atomic(ctx.out / "trust_density.svg",
                      svg_line_chart("Trust spectrum (" + j.at("modality").get<std::string>() + ")", "trust", "density", series));
  }
  write_json(ctx.out / "trust.json", out);
  ctx.log << "trust: " << pooled.size() << " pooled predictions\n";
  return kExitOk;
}

struct CamTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> curves;
};

inline std::string cam_table_csv(const CamTable& t) {
  const std::size_t L = t.curves.empty() ? 0 : t.curves.front().size();
  std::string s = "trial_id";
  for (std::size_t i = 0; i < L; ++i) s += ",p" + std::to_string(i);
  s += '\n';
  for (std::size_t r = 0; r < t.ids.size(); ++r) {
    s += t.ids[r];
    for (double v : t.curves[r]) s += "," + format_double(v);
    s += '\n';
  }
  return s;
}

inline CamTable read_cam_table(const fs::path& p) {
  const auto lines = split_lines(read_file(p));
  if (lines.size() < 2) throw io_error(p.string() + ": no CAM rows");
  CamTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    t.ids.push_back(cells.front());
    std::vector<double> v;
    for (std::size_t k = 1; k < cells.size(); ++k) v.push_back(parse_double(cells[k]));
    t.curves.push_back(std::move(v));
  }
  return t;
}

inline nlohmann::json optional_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline int cmd_cam(Context& ctx, const Options& o) {
  const auto& cfg = ctx.config;
  const auto model = model_from_json(read_json(require_path(cfg.data.model, "model checkpoint")));
  const auto trials = load_prepared(require_path(cfg.data.prepared_manifest, "prepared manifest"));
  const std::size_t cls = model.config.head == HeadKind::classify ? cfg.cam_class : 0;
  CamTable table;
  for (const auto& t : trials) {
    const auto x = model_input(t, cfg.modality);
    if (x.channels() != model.config.in_channels)
      throw std::invalid_argument("cam: model expects " + std::to_string(model.config.in_channels) + " channels but " +
                                  std::string(to_string(cfg.modality)) + " input has " + std::to_string(x.channels()));
    table.ids.push_back(t.trial_id);
    table.curves.push_back(normalize_resample_cam(compute_cam(model, x.data, cls), cfg.cam_length));
  }
  const auto avg = average_curves(table.curves);
  table.ids.push_back("mean");
  table.curves.push_back(avg);
  write_file_atomic(ctx.out / "cam.csv", cam_table_csv(table));
  std::vector<double> pct(avg.size());
  for (std::size_t i = 0; i < pct.size(); ++i) pct[i] = 100.0 * static_cast<double>(i) / static_cast<double>(pct.size() - 1);
  const std::vector<ChartSeries> series{{"mean CAM", pct, avg}};
  write_file_atomic(ctx.out / "cam.svg",
                    svg_line_chart("Class activation map (" + std::string(to_string(cfg.modality)) + ")", "% of task time",
                                   "activation", series));

  nlohmann::json j{{"modality", std::string(to_string(cfg.modality))},
                   {"class_index", cls},
                   {"length", cfg.cam_length},
                   {"trials_averaged", trials.size()},
                   {"interpretation_limited", cfg.modality == Modality::fused}};
  if (!o.against.empty()) {
    const auto other = read_cam_table(o.against);
    const auto other_mean = std::find(other.ids.begin(), other.ids.end(), "mean");
    if (other_mean == other.ids.end()) throw io_error(o.against + ": no mean row");
    const auto& b = other.curves[static_cast<std::size_t>(other_mean - other.ids.begin())];
    if (b.size() != avg.size()) throw std::invalid_argument("cam: curves differ in length");
    j["against"] = fs::path(o.against).filename().string();
    j["rho_mean_curves"] = optional_number(spearman_rho(avg, b));
    std::vector<double> per_trial;
    for (std::size_t r = 0; r + 1 < table.ids.size(); ++r) {
      const auto it = std::find(other.ids.begin(), other.ids.end(), table.ids[r]);
      if (it == other.ids.end()) continue;
      const auto rho = spearman_rho(table.curves[r], other.curves[static_cast<std::size_t>(it - other.ids.begin())]);
      if (rho) per_trial.push_back(*rho);
    }
    j["rho_per_trial"] = per_trial.empty() ? nlohmann::json() : sample_summary(per_trial);
  }
  write_json(ctx.out / "cam.json", j);
  ctx.log << "cam: " << trials.size() << " trials\n";
  return kExitOk;
}

inline int cmd_report(Context& ctx, const Options& o) {
  if (o.inputs.empty()) throw config_error("report needs at least one assess.json or output directory");
  nlohmann::json rows = nlohmann::json::array(), comparisons = nlohmann::json::array();
  std::vector<ChartSeries> series;
  std::string csv = "modality,task,head,metric,iterations,mean_pm_std,post_tukey_mean_pm_std,nts\n";
  for (const auto& in : o.inputs) {
    std::vector<fs::path> files;
    if (fs::is_directory(in)) {
      for (const char* name : {"assess.json", "compare.json"})
        if (fs::exists(fs::path(in) / name)) files.push_back(fs::path(in) / name);
    } else {
      files.push_back(in);
    }
    if (files.empty()) throw io_error(in + ": nothing to report");
    for (const auto& f : files) {
      const auto j = read_json(f);
      if (j.contains("report")) {
        comparisons.push_back(j);
        continue;
      }
      if (!j.contains("iterations")) throw io_error(f.string() + ": not an assess or compare result");
      std::vector<double> values;
      for (const auto& it : j.at("iterations")) values.push_back(it.at("metric").get<double>());
      const auto summary = sample_summary(values);
      std::string nts_text;
      if (j.contains("nts"))
        for (const auto& [k, v] : j.at("nts").items())
          if (k.find("_correct_only") == std::string::npos)
            nts_text += (nts_text.empty() ? "" : " ") + k.substr(4) + "=" + v.at("all").at("mean_pm_std").get<std::string>();
      const std::string post =
          summary["post_tukey"].is_null() ? "n/a" : summary["post_tukey"]["mean_pm_std"].get<std::string>();
      rows.push_back({{"modality", j.at("modality")},
                      {"task", j.at("task")},
                      {"head", j.at("head")},
                      {"metric", j.at("metric")},
                      {"summary", summary},
                      {"nts", j.value("nts", nlohmann::json::object())}});
      csv += j.at("modality").get<std::string>() + "," + j.at("task").get<std::string>() + "," +
             j.at("head").get<std::string>() + "," + j.at("metric").get<std::string>() + "," +
             std::to_string(values.size()) + "," + summary["all"]["mean_pm_std"].get<std::string>() + "," + post + "," +
             nts_text + "\n";
      std::sort(values.begin(), values.end());
      std::vector<double> rank(values.size());
      for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<double>(i + 1);
      series.push_back({j.at("modality").get<std::string>() + " " + j.at("metric").get<std::string>(), rank, values});
    }
  }
  write_json(ctx.out / "report.json", {{"assessments", rows}, {"comparisons", comparisons}});
  write_file_atomic(ctx.out / "summary.csv", csv);
  if (!series.empty())
    write_file_atomic(ctx.out / "distributions.svg",
                      svg_line_chart("Metric distributions (sorted)", "rank", "metric", series));
  ctx.log << "report: " << rows.size() << " assessments, " << comparisons.size() << " comparisons\n";
  return kExitOk;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multimodal skill assessment pipeline", "skillfuse"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run configuration (JSON)");
    sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--jobs", o.jobs, "Worker threads for assess");
    sub->add_option("--iterations", o.iterations, "Assessment iterations (default 100)");
    sub->add_option("--modality", o.modality, "neural | motor | fused")
        ->check(CLI::IsMember({"neural", "motor", "fused"}));
    sub->add_option("--task", o.task, "pattern_cutting | suturing")->check(CLI::IsMember({"pattern_cutting", "suturing"}));
    sub->add_option("--head", o.head, "classify | regress")->check(CLI::IsMember({"classify", "regress"}));
  };
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"synth", "Generate a synthetic dataset (manifest + matrix files)"},
      {"preprocess", "Turn raw trials into aligned, normalized 1 Hz inputs"},
      {"train", "Train one network on all prepared trials"},
      {"assess", "Leave-one-user-out assessment repeated over seeds"},
      {"compare", "Significance test between two metric distributions"},
      {"trust", "Trust spectra and NetTrustScores from an assessment"},
      {"cam", "Class activation maps of a trained model"},
      {"report", "Bundle assessment and comparison results"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs[c.name] = sub;
  }
  for (const char* name : {"preprocess", "train", "assess", "cam"})
    subs[name]->add_option("--data", o.data, "Manifest to read (raw for preprocess, prepared otherwise)");
  subs["cam"]->add_option("--model", o.model, "Model checkpoint (JSON)");
  subs["cam"]->add_option("--against", o.against, "Another cam.csv to correlate with");
  subs["trust"]->add_flag("--correct-only", o.correct_only, "Densities from correctly predicted samples only");
  subs["compare"]->add_option("inputs", o.inputs, "Two distribution CSV files")->expected(2);
  subs["trust"]->add_option("inputs", o.inputs, "assess.json")->expected(1);
  subs["report"]->add_option("inputs", o.inputs, "assess.json / compare.json files or output directories")->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = resolve_config(o, command);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  Context ctx{cfg, fs::path(o.out_dir), out};
  try {
    fs::create_directories(ctx.out);
    write_json(ctx.out / "run_config.json", run_config_to_json(cfg));
    if (command == "synth") return cmd_synth(ctx);
    if (command == "preprocess") return cmd_preprocess(ctx);
    if (command == "train") return cmd_train(ctx);
    if (command == "assess") return cmd_assess(ctx);
    if (command == "compare") return cmd_compare(ctx, o);
    if (command == "trust") return cmd_trust(ctx, o);
    if (command == "cam") return cmd_cam(ctx, o);
    if (command == "report") return cmd_report(ctx, o);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace skillfuse::cli
