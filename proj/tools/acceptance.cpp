// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fd_oracle.hpp"
#include "layer_checks.hpp"
#include "skillfuse/assess.hpp"
#include "skillfuse/cli.hpp"
#include "skillfuse/contrastive.hpp"
#include "skillfuse/explain.hpp"
#include "skillfuse/io.hpp"
#include "skillfuse/pipeline.hpp"
#include "skillfuse/signal.hpp"
#include "skillfuse/stats.hpp"
#include "skillfuse/synth.hpp"
#include "skillfuse/trust.hpp"

using namespace skillfuse;
namespace fs = std::filesystem;

namespace {

// Collects failed conditions for one criterion.
struct Checker {
  std::vector<std::string> failures;
  std::string notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes += (notes.empty() ? "" : "; ") + s; }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<TrialRecord> prepare_all(const std::vector<SynthTrial>& raw) {
  std::vector<TrialRecord> out;
  const PreprocessConfig pc;
  for (const auto& r : raw) out.push_back(prepare_trial(r, pc));
  return out;
}

SynthConfig desk_synth() {
  SynthConfig c;
  c.n_subjects = 8;
  c.trials_per_subject = 10;
  c.separation = 3.0;
  c.rng_seed = 7;
  return c;
}

VbaNetConfig desk_net(std::size_t in_channels, HeadKind head) {
  VbaNetConfig c;
  c.in_channels = in_channels;
  c.conv_filters = 16;
  c.se_reduction = 4;
  c.kernel = 3;
  c.learning_rate = 3e-3;
  c.max_epochs = 60;
  c.patience = 10;
  c.head = head;
  return c;
}

const std::vector<TrialRecord>& desk_data() {
  static const auto data = prepare_all(generate_dataset(desk_synth()));
  return data;
}

void gradients(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(5);
  const Matrix x = checks::random_matrix(20, 6, rng);
  for (auto [head, target] : {std::pair{HeadKind::classify, 1.0}, std::pair{HeadKind::regress, 0.7}}) {
    VbaNetConfig cfg;
    cfg.in_channels = 6;
    cfg.conv_filters = 16;
    cfg.se_reduction = 4;
    cfg.head = head;
    cfg.rng_seed = 42;
    const auto r = grad_check(cfg, x, target);
    const std::string name = head == HeadKind::classify ? "classify" : "regress";
    c.expect(r.coordinates_checked >= 200, name + " checked only " + std::to_string(r.coordinates_checked));
    c.expect(r.max_relative_error < 1e-4, name + " full-network error " + num(r.max_relative_error));
    c.note(name + " " + num(r.max_relative_error, 2) + " over " + std::to_string(r.coordinates_checked));
  }
  const std::pair<const char*, double> layers[] = {{"conv1d", checks::conv1d_error()},
                                                   {"scse", checks::scse_error()},
                                                   {"gap+dense+softmax", checks::gap_dense_softmax_error()},
                                                   {"dense+squared", checks::dense_squared_error()}};
  double worst = 0;
  for (const auto& [name, err] : layers) {
    c.expect(err < 1e-6, std::string(name) + " layer error " + num(err));
    worst = std::max(worst, err);
  }
  c.note("worst layer " + num(worst, 2));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 30.0, "took " + num(elapsed) + " s");
}

std::vector<double> sine(double f, double fs, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

void filter(Checker& c) {
  constexpr double fs = 7.8125;
  const std::size_t n = static_cast<std::size_t>(600 * fs), lo = n / 4, hi = 3 * n / 4;

  const auto pass = bandpass_filter(Matrix::column(sine(0.1, fs, n)), fs);
  double ss = 0, sc = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double ph = 2 * std::numbers::pi * 0.1 * static_cast<double>(i) / fs;
    ss += pass.values()[i] * std::sin(ph);
    sc += pass.values()[i] * std::cos(ph);
  }
  const double amp = 2 * std::hypot(ss, sc) / static_cast<double>(hi - lo);
  c.expect(std::abs(amp - 1.0) < 0.05, "0.1 Hz amplitude " + num(amp));

  const auto stop = bandpass_filter(Matrix::column(sine(2.0, fs, n)), fs);
  double peak = 0;
  for (std::size_t i = lo; i < hi; ++i) peak = std::max(peak, std::abs(stop.values()[i]));
  const double db = -20 * std::log10(std::max(peak, 1e-300));
  c.expect(db >= 20.0, "2 Hz attenuation " + num(db) + " dB");

  const auto dc = bandpass_filter(Matrix(n, 1, 5.0), fs);
  double dc_peak = 0;
  for (double v : dc.values()) dc_peak = std::max(dc_peak, std::abs(v));
  c.expect(dc_peak / 5.0 < 1e-3, "DC residue " + num(dc_peak / 5.0));

  const auto x = sine(0.1, fs, n);
  int best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int lag = -20; lag <= 20; ++lag) {
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * pass.values()[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (s > best) best = s, best_lag = lag;
  }
  c.expect(best_lag == 0, "lag " + std::to_string(best_lag));
  c.note("gain " + num(amp, 5) + ", stop " + num(db, 3) + " dB, DC " + num(dc_peak / 5.0, 2) + ", lag " +
         std::to_string(best_lag));
}

void mbll(Checker& c) {
  Rng rng(23);
  double worst = 0;
  std::size_t cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    MbllParams p;
    if (trial > 0) {
      for (auto& row : p.extinction)
        for (double& v : row) v = rng.uniform(1e-5, 3e-4);
      p.dpf = {rng.uniform(4, 8), rng.uniform(4, 8)};
      p.distance_mm = rng.uniform(20, 40);
    }
    if (std::abs(p.determinant()) < 1e-10) continue;
    const double hbo = rng.normal(0, 2);
    const double hbr = rng.normal(0, 1);
    OdSeries od{Matrix(1, 2), 1.0, {690, 830}, "c"};
    for (std::size_t w = 0; w < 2; ++w) od.samples(0, w) = p.forward(w, hbo, hbr);
    const auto h = mbll_convert(od, p);
    worst = std::max({worst, std::abs(h.delta_hbo[0] - hbo), std::abs(h.delta_hbr[0] - hbr)});
    ++cases;
  }
  c.expect(cases >= 900, "only " + std::to_string(cases) + " usable parameter sets");
  c.expect(worst < 1e-9, "round-trip error " + num(worst));
  c.note(std::to_string(cases) + " cases, worst " + num(worst, 2));
}

void statistics(Checker& c) {
  auto pairwise = [](const std::vector<double>& x, const std::vector<double>& y) {
    double count = 0;
    for (double p : x)
      for (double q : y) count += p > q ? 1.0 : p == q ? 0.5 : 0.0;
    return count;
  };
  std::vector<std::pair<std::vector<double>, std::vector<double>>> sets{
      {{1, 2, 3, 4, 5}, {3, 4, 5, 6, 7}}, {{1}, {2}}, {{2, 2, 2}, {2, 2}}, {{0.5, 9, 3, 3}, {3, 1, 7, 7, 7, 2, 8, 0}}};
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n1 = 1 + rng.below(11);
    const std::size_t n2 = 1 + rng.below(12 - n1);
    std::vector<double> x(n1), y(n2);
    for (double& v : x) v = static_cast<double>(rng.below(6));
    for (double& v : y) v = static_cast<double>(rng.below(6));
    sets.emplace_back(std::move(x), std::move(y));
  }
  std::size_t bad = 0;
  for (const auto& [x, y] : sets) bad += mann_whitney_u(x, y) != pairwise(x, y) || mann_whitney_u(y, x) != pairwise(y, x);
  c.expect(bad == 0, std::to_string(bad) + " Mann-Whitney mismatches");

  // reference W from scipy.stats.shapiro
  const std::vector<double> eleven{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236};
  const double w = shapiro_wilk(eleven).w;
  c.expect(std::abs(w - 0.7888146948631716) <= 0.01, "Shapiro-Wilk W " + num(w, 10));

  const std::vector<double> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
  const auto kept = tukey_fences(ten);
  std::multiset<double> removed(ten.begin(), ten.end());
  for (double v : kept) removed.erase(removed.find(v));
  c.expect(removed == std::multiset<double>{100}, "Tukey removed " + std::to_string(removed.size()) + " values");
  c.note(std::to_string(sets.size()) + " U sets, W " + num(w, 8) + ", Tukey removed {100}");
}

void nt_xent(Checker& c) {
  const Matrix two = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  const double loss = nt_xent_loss(two, 1.0).loss;
  c.expect(std::abs(loss - std::log(1.0 + 2.0 * std::exp(-1.0))) < 1e-9, "N=2 loss " + num(loss, 17));

  Rng rng(31);
  Matrix single(2, 5);
  for (double& v : single.values()) v = rng.normal();
  c.expect(nt_xent_loss(single, 0.5).loss == 0.0, "N=1 loss is not 0");

  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t N = 2 + rng.below(3);
    const std::size_t K = 3 + rng.below(4);
    Matrix e(2 * N, K);
    for (double& v : e.values()) v = rng.normal();
    const double tau = rng.uniform(0.2, 1.0);
    const auto g = nt_xent_loss(e, tau).gradient;
    const auto numeric = fd::gradient(
        [&](const std::vector<double>& th) { return nt_xent_loss(checks::from_flat(th, 2 * N, K), tau).loss; },
        {e.values().begin(), e.values().end()});
    worst = std::max(worst, fd::max_relative_error({g.values().begin(), g.values().end()}, numeric));
  }
  c.expect(worst < 1e-6, "gradient error " + num(worst));
  c.note("N=2 loss " + num(loss, 16) + ", gradient " + num(worst, 2));
}

void trust(Checker& c) {
  const std::vector<PredictionRecord> perfect{{"a", 0, 0, 1.0}, {"b", 1, 1, 1.0}, {"c", 1, 1, 1.0}, {"d", 0, 0, 1.0}};
  const auto nts = net_trust_score(perfect);
  c.expect(nts.size() == 2 && nts.at(0) == 1.0 && nts.at(1) == 1.0, "perfect predictions do not give NTS 1");

  Rng rng(21);
  double worst_nts = 0, worst_area = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PredictionRecord> recs(1 + rng.below(40));
    for (auto& r : recs) {
      r.true_class = static_cast<int>(rng.below(2));
      r.predicted_class = static_cast<int>(rng.below(2));
      r.confidence = 0.5 + 0.5 * rng.uniform();
    }
    for (const auto& [cls, v] : net_trust_score(recs)) {
      double s = 0, n = 0;
      for (const auto& r : recs)
        if (r.true_class == cls) {
          s += r.predicted_class == r.true_class ? r.confidence : 1.0 - r.confidence;
          n += 1;
        }
      worst_nts = std::max(worst_nts, std::abs(v - s / n));
    }
    std::vector<double> t(2 + rng.below(60));
    for (double& v : t) v = rng.uniform() < 0.3 ? 1.0 : rng.uniform();
    const auto d = trust_density(t);
    worst_area = std::max(worst_area, std::abs(trapezoid(d.grid, d.density) - 1.0));
  }
  c.expect(worst_nts <= 1e-12, "NTS closed form off by " + num(worst_nts));
  c.expect(worst_area <= 1e-3, "density area off by " + num(worst_area));
  c.note("NTS identity " + num(worst_nts, 2) + ", area " + num(worst_area, 2));
}

void cam(Checker& c) {
  const auto& data = desk_data();
  double worst = 0;
  std::size_t models = 0;
  for (auto modality : {Modality::neural, Modality::motor, Modality::fused}) {
    for (auto head : {HeadKind::classify, HeadKind::regress}) {
      std::vector<TrainingExample> examples;
      for (const auto& t : data) examples.push_back(training_example(t, modality, head));
      auto cfg = desk_net(examples.front().x.cols(), head);
      cfg.max_epochs = 20;
      cfg.rng_seed = derive_seed(7, models);
      const auto model = train(cfg, examples);
      for (const auto& e : examples) worst = std::max(worst, checks::cam_identity_error(model, e.x));
      ++models;
    }
  }
  c.expect(worst < 1e-9, "CAM identity off by " + num(worst));

  const std::vector<double> a{1, 2, 3, 4, 5}, rev{5, 4, 3, 2, 1}, tied{5, 6, 7, 8, 7};
  const double r_same = spearman_rho(a, a).value_or(0.0);
  const double r_rev = spearman_rho(a, rev).value_or(0.0);
  const double r_tie = spearman_rho(a, tied).value_or(0.0);
  c.expect(std::abs(r_same - 1.0) < 1e-12, "rho(a, a) = " + num(r_same, 17));
  c.expect(std::abs(r_rev + 1.0) < 1e-12, "rho(a, reversed) = " + num(r_rev, 17));
  // ranks of the tied vector are 1, 2, 3.5, 5, 3.5, so rho = 8 / sqrt(95)
  c.expect(std::abs(r_tie - 0.8207826816681233) < 1e-12, "tie case rho = " + num(r_tie, 17));
  c.note(std::to_string(models) + " trained models, worst " + num(worst, 2) + ", tie rho " + num(r_tie, 10));
}

void end_to_end(Checker& c) {
  const auto& data = desk_data();
  constexpr std::size_t kIterations = 10;
  constexpr std::uint64_t kMaster = 100;
  auto mean_metric = [&](Modality m, HeadKind head) {
    const auto cfg = desk_net(model_input(data.front(), m).channels(), head);
    const auto runs = repeat_runs(data, m, head, nnet_learner(cfg), kIterations, kMaster,
                                  std::max(1u, std::thread::hardware_concurrency()));
    double s = 0;
    for (const auto& r : runs) s += r.metric;
    return s / static_cast<double>(runs.size());
  };
  const double acc_fused = mean_metric(Modality::fused, HeadKind::classify);
  const double acc_motor = mean_metric(Modality::motor, HeadKind::classify);
  const double acc_neural = mean_metric(Modality::neural, HeadKind::classify);
  const double r2_fused = mean_metric(Modality::fused, HeadKind::regress);
  const double r2_motor = mean_metric(Modality::motor, HeadKind::regress);
  const double r2_neural = mean_metric(Modality::neural, HeadKind::regress);
  c.expect(r2_fused >= r2_motor, "fused R2 " + num(r2_fused) + " < motor " + num(r2_motor));
  c.expect(r2_fused >= r2_neural, "fused R2 " + num(r2_fused) + " < neural " + num(r2_neural));
  c.expect(acc_fused >= acc_motor, "fused accuracy " + num(acc_fused) + " < motor " + num(acc_motor));
  c.note("accuracy fused/motor/neural " + num(acc_fused, 3) + "/" + num(acc_motor, 3) + "/" + num(acc_neural, 3) +
         ", R2 " + num(r2_fused, 3) + "/" + num(r2_motor, 3) + "/" + num(r2_neural, 3));
}

TrialRecord stub_record(const std::string& subject, std::size_t k, int label, std::vector<double> value) {
  TrialRecord r;
  r.trial_id = subject + "_t" + std::to_string(k);
  r.subject_id = subject;
  r.label = label;
  Matrix m(1, value.size());
  for (std::size_t i = 0; i < value.size(); ++i) m(0, i) = value[i];
  r.neural = {m, 1.0, std::vector<std::string>(value.size(), "c"), Modality::neural};
  r.motor = r.neural;
  r.motor.modality = Modality::motor;
  return r;
}

// Every subject carries a strong fingerprint and a subject-level random label.
std::vector<TrialRecord> fingerprint_dataset(std::size_t subjects, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrialRecord> out;
  for (std::size_t s = 0; s < subjects; ++s) {
    std::vector<double> print(3);
    for (double& v : print) v = rng.normal();
    const int label = static_cast<int>(rng.below(2));
    for (std::size_t t = 0; t < trials; ++t) {
      auto v = print;
      for (double& x : v) x += 0.01 * rng.normal();
      out.push_back(stub_record("s" + std::to_string(s), t, label, v));
    }
  }
  return out;
}

Learner nearest_neighbour() {
  return [](std::span<const TrainingExample> data, std::uint64_t) -> Predictor {
    std::vector<TrainingExample> copy(data.begin(), data.end());
    return [copy](const Matrix& x) {
      double best = std::numeric_limits<double>::infinity();
      int cls = 0;
      for (const auto& e : copy) {
        double d = 0;
        for (std::size_t i = 0; i < x.size(); ++i) d += std::pow(x.values()[i] - e.x.values()[i], 2);
        if (d < best) best = d, cls = static_cast<int>(e.target);
      }
      Prediction p;
      p.predicted_class = cls;
      p.confidence = 1.0;
      p.probabilities = {cls == 0 ? 1.0 : 0.0, cls == 1 ? 1.0 : 0.0};
      return p;
    };
  };
}

bool folds_valid(std::span<const TrialRecord> data) {
  const auto folds = louo_folds(data);
  std::set<std::string> subjects;
  for (const auto& t : data) subjects.insert(t.subject_id);
  if (folds.size() != subjects.size()) return false;
  std::vector<int> seen(data.size(), 0);
  for (const auto& f : folds) {
    if (f.train.size() + f.val.size() != data.size() || f.val.empty()) return false;
    for (std::size_t i : f.val) {
      if (data[i].subject_id != f.held_out_subject) return false;
      ++seen[i];
    }
    for (std::size_t i : f.train)
      if (data[i].subject_id == f.held_out_subject) return false;
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

void louo(Checker& c) {
  auto suturing = SynthConfig::for_task(Task::suturing);
  suturing.n_subjects = 5;
  suturing.trials_per_subject = 3;
  suturing.rng_seed = 3;
  const std::vector<std::pair<std::string, std::vector<TrialRecord>>> datasets{
      {"desk", desk_data()},
      {"suturing", prepare_all(generate_dataset(suturing))},
      {"fingerprint", fingerprint_dataset(40, 4, 12)},
      {"uneven", fingerprint_dataset(3, 7, 4)}};
  for (const auto& [name, d] : datasets) c.expect(folds_valid(d), "fold invariants broken on " + name);

  const auto data = fingerprint_dataset(40, 4, 12);
  const double acc = run_assessment(data, Modality::neural, HeadKind::classify, nearest_neighbour(), 1).metric;
  const double sigma = std::sqrt(0.25 / 40.0);  // labels are per subject
  c.expect(std::abs(acc - 0.5) <= 3 * sigma, "leakage accuracy " + num(acc));
  c.note(std::to_string(datasets.size()) + " datasets, leakage accuracy " + num(acc, 3) + " (3 sigma = " +
         num(3 * sigma, 3) + ")");
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "skillfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "skillfuse %s failed: %s", args[1].c_str(), err.str().c_str());
  return code;
}

std::vector<fs::path> regular_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  std::sort(out.begin(), out.end());
  return out;
}

void reproducibility(Checker& c) {
  const auto root = fs::temp_directory_path() / "skillfuse_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const nlohmann::json config{
      {"seed", 11},
      {"synth", {{"n_subjects", 6}, {"trials_per_subject", 4}, {"frames", {{"render", true}, {"size", 16}}}}},
      {"contrastive",
       {{"feature_dim", 8}, {"projection_dim", 8}, {"epochs", 5}, {"max_training_frames", 200}, {"augment", {{"crop_size", 12}}}}},
      {"nnet", {{"conv_filters", 8}, {"se_reduction", 4}, {"max_epochs", 40}, {"learning_rate", 3e-3}}},
      {"assess", {{"iterations", 3}}}};
  const auto cfg = (root / "config.json").string();
  write_file_atomic(cfg, config.dump(2));

  for (const char* chain : {"a", "b"}) {
    const auto dir = root / chain;
    c.expect(run_cli({"synth", "--config", cfg, "--out", (dir / "raw").string()}) == 0, "synth failed");
    c.expect(run_cli({"preprocess", "--config", cfg, "--data", (dir / "raw/manifest.csv").string(), "--out",
                      (dir / "prep").string()}) == 0,
             "preprocess failed");
  }
  if (!c.failures.empty()) return;
  for (const auto& f : regular_files(root / "a/prep"))
    if (f != "run_config.json")
      c.expect(read_file(root / "a/prep" / f) == read_file(root / "b/prep" / f), "prepared " + f.string() + " differs");

  const auto first = root / "assess1", second = root / "assess2";
  c.expect(run_cli({"assess", "--config", cfg, "--data", (root / "a/prep/manifest.csv").string(), "--out",
                    first.string()}) == 0,
           "first assess failed");
  c.expect(run_cli({"assess", "--config", (first / "run_config.json").string(), "--out", second.string()}) == 0,
           "second assess failed");
  if (!c.failures.empty()) return;
  const auto files = regular_files(first);
  c.expect(files == regular_files(second), "report file sets differ");
  std::size_t compared = 0;
  for (const auto& f : files) {
    c.expect(read_file(first / f) == read_file(second / f), f.string() + " differs");
    ++compared;
  }
  const auto summary = nlohmann::json::parse(read_file(first / "assess.json"))["summary"]["all"];
  c.note(std::to_string(compared) + " report files byte-identical, fused accuracy " +
         summary["mean_pm_std"].get<std::string>());
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Checker&)>>> criteria{
      {"gradient correctness", gradients},
      {"band-pass filter contract", filter},
      {"MBLL round trip", mbll},
      {"statistics oracles", statistics},
      {"NT-Xent oracle", nt_xent},
      {"trust contracts", trust},
      {"CAM identity and Spearman cases", cam},
      {"synthetic end-to-end modality ordering", end_to_end},
      {"leave-one-subject-out integrity", louo},
      {"assessment reproducibility", reproducibility}};
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::string detail = ok ? c.notes : c.failures.front();
    for (std::size_t k = ok ? c.failures.size() : 1; k < c.failures.size(); ++k) detail += "; " + c.failures[k];
    std::printf("%s %2zu %s: %s [%.1f s]\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first, detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              seconds_since(start));
  return failed == 0 ? 0 : 1;
}
