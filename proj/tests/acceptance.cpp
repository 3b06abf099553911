// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "clothservo/experiment.hpp"
#include "clothservo/features.hpp"
#include "clothservo/imaging.hpp"
#include "clothservo/sparse.hpp"
#include "oracles.hpp"

using namespace clothservo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1 -------------------------------------------------------------------------
void convolution_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(8, 40), rad(1, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int w = dim(rng), h = dim(rng);
    const Image img = oracle::random_image(w, h, rng);
    Kernel k;
    k.size = 2 * rad(rng) + 1;
    k.weights.resize(static_cast<std::size_t>(k.size) * k.size);
    for (double& v : k.weights) v = g(rng);
    worst = std::max(worst, oracle::max_abs_diff(convolve(img, k).data(), oracle::convolve(img.data(), w, h, k.weights, k.size)));
  }
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-9 && secs < 10.0, fmt("50 instances, max |diff| %.3g (tol 1e-9), %.2f s (limit 10 s)", worst, secs));
}

// 2 -------------------------------------------------------------------------
void how_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::bernoulli_distribution keep(0.75);
  const FeatureLayout layout = FeatureLayout::default_layout();
  std::vector<oracle::Gabor> bank;
  for (const auto& p : layout.filter_bank)
    bank.push_back({p.wavelength, p.orientation, p.phase, p.sigma, p.aspect, p.support_radius});
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Image img = oracle::random_image(64, 64, rng);
    Mask mask(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) mask.set(x, y, keep(rng));
    const auto f = how_features(img, mask, layout);
    const auto ref = oracle::how(img, mask, bank, layout.grid_sizes);
    worst = std::max(worst, ref.size() == f.size() ? (f.values - ref).cwiseAbs().maxCoeff() : 1e300);
  }
  const double secs = seconds_since(t0);
  report(2, worst <= 1e-9 && secs < 10.0, fmt("20 images, max |diff| %.3g (tol 1e-9), %.2f s (limit 10 s)", worst, secs));
}

// 3 -------------------------------------------------------------------------
void lasso_certificates() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> atoms(1, 64), dims(1, 256);
  std::uniform_real_distribution<double> alphas(0.001, 2.0);
  int kkt_ok = 0;
  double worst_kkt = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = atoms(rng), d = dims(rng);
    const Eigen::MatrixXd D = Eigen::MatrixXd::NullaryExpr(d, n, [&] { return g(rng); });
    const Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); });
    SparseSolverConfig cfg;
    cfg.alpha = alphas(rng);
    cfg.tol = 1e-6;
    cfg.max_iters = 100000;
    const SparseCode c = SparseCoder(D).solve(q, cfg);
    const double scale = std::max(1.0, (2.0 * D.transpose() * q).cwiseAbs().maxCoeff());
    const double v = kkt_violation(D, q, c.beta, cfg.alpha) / scale;
    worst_kkt = std::max(worst_kkt, v);
    kkt_ok += c.converged && v <= 1e-6;
  }
  int brute_ok = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = 1 + i % 5, d = 3 + i % 7;
    const Eigen::MatrixXd D = Eigen::MatrixXd::NullaryExpr(d, n, [&] { return g(rng); });
    const Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); });
    const double alpha = alphas(rng);
    SparseSolverConfig cfg;
    cfg.alpha = alpha;
    cfg.tol = 1e-10;
    cfg.max_iters = 100000;
    const double got = SparseCoder(D).solve(q, cfg).objective;
    const double best = oracle::lasso_objective(D, q, oracle::lasso_brute_force(D, q, alpha), alpha);
    worst_gap = std::max(worst_gap, std::abs(got - best));
    brute_ok += std::abs(got - best) <= 1e-6;
  }
  const double secs = seconds_since(t0);
  report(3, kkt_ok == 100 && brute_ok == 20 && secs < 30.0,
         fmt("KKT %d/100 (worst scaled violation %.3g, tol 1e-6); brute force %d/20 (worst gap %.3g, tol 1e-6); %.2f s "
             "(limit 30 s)",
             kkt_ok, worst_kkt, brute_ok, worst_gap, secs));
}

// 4, 5, 10 ----------------------------------------------------------------------
struct FlattenRun {
  TaskSetup setup;
  TaskOutcome outcome;
};

std::vector<FlattenRun> flatten_suite(const ExperimentConfig& cfg, const FeedbackDictionary& dict) {
  std::vector<FlattenRun> runs;
  for (std::uint64_t s : cfg.seeds) {
    FlattenRun r{make_task(cfg, Task::Flatten, s, dict.spec), {}};
    r.outcome = run_task(cfg, dict, r.setup);
    std::printf("    seed %llu: feature ratio %.3f, shape %.4f -> %.4f m, %ld steps, %s, %.1f s\n",
                static_cast<unsigned long long>(s), r.outcome.ratio, r.outcome.shape_initial, r.outcome.shape_final,
                r.outcome.trace.steps(), to_string(r.outcome.trace.reason).c_str(), r.outcome.seconds);
    std::fflush(stdout);
    runs.push_back(std::move(r));
  }
  return runs;
}

void flatten(const std::vector<FlattenRun>& runs, const ExperimentConfig& cfg) {
  int ok = 0;
  bool bounded = true;
  double slowest = 0.0;
  long longest = 0;
  for (const auto& r : runs) {
    ok += r.outcome.ratio <= 0.2 && r.outcome.trace.reason != StopReason::Diverged;
    longest = std::max(longest, r.outcome.trace.steps());
    slowest = std::max(slowest, r.outcome.seconds);
    bounded = bounded && r.outcome.trace.steps() <= 400 && r.outcome.seconds <= 120.0;
  }
  report(4, ok >= 8 && bounded,
         fmt("%d/10 seeds reach final/initial feature error <= 0.2 (need 8); max %ld steps (limit 400), slowest %.1f s "
             "(limit 120 s); N_dic %d, alpha %g, lambda %g",
             ok, longest, slowest, cfg.n_dic, cfg.sparse.alpha, cfg.servo.gain));
}

void perturbed_hold(const std::vector<FlattenRun>& runs, const ExperimentConfig& cfg, const FeedbackDictionary& dict) {
  int ok = 0;
  double worst = 0.0;
  for (const auto& r : runs) {
    const HoldOutcome h = run_hold(cfg, dict, r.outcome.trace.final_state, r.setup.goal);
    const double ratio = h.peak / h.steady;
    std::printf("    hold: steady %.4f, perturbed peak %.4f (%.2fx), %zu perturbed steps\n", h.steady, h.peak, ratio,
                h.perturbed.records.size() - 1);
    std::fflush(stdout);
    ok += h.success && h.perturbed.steps() == cfg.hold_steps;
    worst = std::max(worst, ratio);
  }
  report(5, ok >= 8,
         fmt("%d/10 seeds keep the error below 3x the unperturbed steady state for %d steps (need 8); worst peak %.2fx; "
             "tug %.3f m, period %.0f frames",
             ok, cfg.hold_steps, worst, cfg.tug_amplitude.norm(), cfg.tug_period));
}

void determinism(const ExperimentConfig& cfg, const FeedbackDictionary& dict, const FlattenRun& first) {
  const FeedbackDictionary again = train_default(cfg, cfg.scene.features);
  const bool same_dict = serialize_dictionary(again) == serialize_dictionary(dict);
  const TaskSetup setup = make_task(cfg, Task::Flatten, cfg.seeds.front(), again.spec);
  const TaskOutcome out = run_task(cfg, again, setup);
  const bool same_trace = trace_to_jsonl(out.trace) == trace_to_jsonl(first.outcome.trace);
  const bool same_report = task_report(cfg, cfg.seeds.front(), out).dump() ==
                           task_report(cfg, cfg.seeds.front(), first.outcome).dump();
  report(10, same_dict && same_trace && same_report,
         fmt("rerun of seed %llu: dictionary %s, trace %s (%zu records), report %s",
             static_cast<unsigned long long>(cfg.seeds.front()), same_dict ? "identical" : "DIFFERS",
             same_trace ? "identical" : "DIFFERS", out.trace.records.size(), same_report ? "identical" : "DIFFERS"));
}

// 6 -------------------------------------------------------------------------
void dictionary_size_trend(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.dict_sizes = {8, 128};
  const std::size_t pool = static_cast<std::size_t>(cfg.samples_per_word) * 128;
  const auto rows = velocity_sweep(cfg, make_split(cfg, Split::SameSubject, pool, pool));
  bool ok = true;
  std::string detail;
  for (double a : cfg.alphas) {
    double e8 = NAN, e128 = NAN;
    for (const auto& r : rows)
      if (r.alpha == a) (r.n_dic == 8 ? e8 : e128) = r.error;
    ok = ok && e128 <= e8;
    detail += fmt("alpha %g: %.5f (N_dic 128) vs %.5f (N_dic 8); ", a, e128, e8);
  }
  report(6, ok, detail + "held-out mean |v - v*|");
}

// 7 -------------------------------------------------------------------------
void alpha_sweep(const ExperimentConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.samples_per_word) * cfg.n_dic;
  const SplitWords words = make_split(cfg, Split::SameSubject, n, 10);
  const FeedbackDictionary dict = build_dictionary(words.train, cfg.n_dic, derive_seed(cfg.seed, "kmeans"), cfg.scene.features);
  const SparseCoder coder(dict.feature_matrix());
  bool monotone = true, zero_above = true;
  double worst_rise = 0.0;
  int n_alpha = 0;
  for (const auto& w : words.test) {
    double prev = std::numeric_limits<double>::infinity();
    n_alpha = 0;
    for (double alpha = 1e-4; alpha <= 100.0; alpha *= 1.25, ++n_alpha) {
      SparseSolverConfig sc;
      sc.alpha = alpha;
      sc.tol = 1e-10;
      sc.max_iters = 200000;
      const double l1 = coder.solve(w.ds, sc).beta.lpNorm<1>();
      worst_rise = std::max(worst_rise, l1 - prev);
      monotone = monotone && l1 <= prev + 1e-9 * std::max(1.0, prev);
      prev = l1;
    }
    SparseSolverConfig above;
    above.alpha = 2.0 * (dict.feature_matrix().transpose() * w.ds).cwiseAbs().maxCoeff() * (1.0 + 1e-12);
    zero_above = zero_above && coder.solve(w.ds, above).beta.isZero(0.0);
  }
  report(7, monotone && zero_above,
         fmt("10 held-out queries, %d alphas in [1e-4, 100]: |beta|_1 %s (largest rise %.3g); beta %s above "
             "2 max|a^T q|",
             n_alpha, monotone ? "non-increasing" : "INCREASES", std::max(0.0, worst_rise), zero_above ? "exactly 0" : "NONZERO"));
}

// 8 -------------------------------------------------------------------------
void feature_ordering(const ExperimentConfig& base) {
  int shape[2] = {0, 0}, feature[2] = {0, 0};
  const FeatureSet sets[2] = {FeatureSet::HowHog, FeatureSet::Color};
  for (int k = 0; k < 2; ++k) {
    ExperimentConfig cfg = base;
    cfg.scene.features.set = sets[k];
    const FeedbackDictionary dict = train_default(cfg, cfg.scene.features);
    for (std::uint64_t s : cfg.seeds) {
      const TaskOutcome r = run_task(cfg, dict, make_task(cfg, Task::Flatten, s, dict.spec));
      shape[k] += r.shape_success;
      feature[k] += r.success;
    }
    std::printf("    %s: shape success %d/10, own-feature success %d/10\n", to_string(sets[k]).c_str(), shape[k], feature[k]);
    std::fflush(stdout);
  }
  report(8, shape[0] >= shape[1],
         fmt("flattening success (cloth within 20%% of its initial RMS distance to the flat pose): HOW+HOG %d/10 >= "
             "color %d/10",
             shape[0], shape[1]));
}

// 9 -------------------------------------------------------------------------
void subject_split(const ExperimentConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.samples_per_word) * cfg.n_dic;
  double err[2];
  int k = 0;
  for (Split split : {Split::SameSubject, Split::DifferentSubject}) {
    const SplitWords words = make_split(cfg, split, n, n);
    const FeedbackDictionary dict = build_dictionary(words.train, cfg.n_dic, derive_seed(cfg.seed, "kmeans"), cfg.scene.features);
    err[k++] = velocity_error(predict(dict, words.test, cfg.sparse));
  }
  report(9, err[1] <= 2.0 * err[0],
         fmt("held-out velocity error: different subject %.5f <= 2 x same subject %.5f (ratio %.2f)", err[1], err[0],
             err[1] / err[0]));
}

void timed(const char* name, const std::function<void()>& f) {
  const auto t0 = Clock::now();
  f();
  std::printf("    (%s: %.1f s)\n", name, seconds_since(t0));
  std::fflush(stdout);
}

}  // namespace

int main() {
  const ExperimentConfig cfg;
  std::printf("acceptance suite, version %s, seed %llu, config %s\n", std::string(kVersion).c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.hash().c_str());

  timed("oracles", [] {
    convolution_oracle();
    how_oracle();
    lasso_certificates();
  });

  const FeedbackDictionary dict = train_default(cfg, cfg.scene.features);
  std::vector<FlattenRun> runs;
  timed("flatten", [&] {
    runs = flatten_suite(cfg, dict);
    flatten(runs, cfg);
  });
  timed("hold", [&] { perturbed_hold(runs, cfg, dict); });
  timed("sweep", [&] { dictionary_size_trend(cfg); });
  timed("alpha", [&] { alpha_sweep(cfg); });
  timed("features", [&] { feature_ordering(cfg); });
  timed("subjects", [&] { subject_split(cfg); });
  timed("determinism", [&] { determinism(cfg, dict, runs.front()); });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
