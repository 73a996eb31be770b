// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Sub-results are indented under their criterion.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "evlab/calibrate.hpp"
#include "evlab/cli/run.hpp"
#include "evlab/compress.hpp"
#include "evlab/evcore.hpp"
#include "evlab/families.hpp"
#include "evlab/rng.hpp"
#include "evlab/simd/kernels.hpp"
#include "evlab/simlab.hpp"
#include "oracles.hpp"

using namespace evlab;
using simlab::Constructor;
using simlab::Sampler;
using simlab::SimConfig;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)), start_(Clock::now()) {}

  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char line[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(line, sizeof line, fmt, args);
    va_end(args);
    std::printf("    [%s] %s\n", ok ? "ok" : "FAIL", line);
    std::fflush(stdout);
    passed_ = passed_ && ok;
  }

  bool finish() const {
    std::printf("%s  criterion %d: %s (%.1f s)\n", passed_ ? "PASS" : "FAIL", id_, title_.c_str(),
                seconds_since(start_));
    std::fflush(stdout);
    return passed_;
  }

 private:
  int id_;
  std::string title_;
  Clock::time_point start_;
  bool passed_ = true;
};

SimConfig config(std::uint64_t seed, std::size_t reps, std::size_t horizon, double alpha = 0.05) {
  SimConfig c;
  c.seed = seed;
  c.reps = reps;
  c.horizon = horizon;
  c.alpha = alpha;
  return c;
}

struct NullCase {
  Sampler null;
  Constructor constructor;
};

std::vector<NullCase> families_under_null() {
  using namespace families;
  const auto grid = simlab::default_lambda_grid();
  const BoundedMeanNull half(0.5);
  std::vector<NullCase> cases;
  cases.push_back({simlab::bernoulli_sampler(0.5),
                   {"lr bernoulli 0.5 vs 0.7", [](std::span<const double> x) {
                      return lr_eprocess(bernoulli(0.5), bernoulli(0.7), x);
                    }}});
  cases.push_back({simlab::gaussian_sampler(0.0, 1.0),
                   {"lr gaussian N(0,1) vs N(0.5,1)", [](std::span<const double> x) {
                      return lr_eprocess(gaussian(0.0, 1.0), gaussian(0.5, 1.0), x);
                    }}});
  cases.push_back({simlab::gaussian_sampler(0.0, 1.0),
                   {"gaussian evar lambda 0.5", [](std::span<const double> x) {
                      return gaussian_eprocess(0.5, 1.0, x);
                    }}});
  cases.push_back({simlab::gaussian_sampler(0.0, 1.0),
                   {"gaussian mixture default grid", [grid](std::span<const double> x) {
                      return gaussian_mixture_eprocess(grid.lambdas, grid.weights, 1.0, x);
                    }}});
  cases.push_back({simlab::beta_sampler(2.0, 2.0),
                   {"bounded mean 0.5 agrapa, beta(2,2)", [half](std::span<const double> x) {
                      return bounded_mean_eprocess(half, LambdaStrategy::agrapa(), x);
                    }}});
  cases.push_back({simlab::bernoulli_sampler(0.5),
                   {"bounded mean 0.5 fixed 1.5, bernoulli(0.5)", [half](std::span<const double> x) {
                      return bounded_mean_eprocess(half, LambdaStrategy::fixed(1.5), x);
                    }}});
  cases.push_back({simlab::beta_sampler(0.5, 0.5),
                   {"bounded mean 0.5 grid mixture, beta(0.5,0.5)", [half](std::span<const double> x) {
                      static const LambdaStrategy s = LambdaStrategy::grid_mixture(
                          {-1.5, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 1.5}, std::vector<double>(8, 0.125));
                      return bounded_mean_eprocess(half, s, x);
                    }}});
  cases.push_back({simlab::bernoulli_sampler(0.5),
                   {"universal bernoulli [0.2,0.5] kt", [](std::span<const double> x) {
                      return universal_inference(BernoulliFamily{0.2, 0.5}, KtPlugin{}, x).trace;
                    }}});
  cases.push_back({simlab::gaussian_sampler(0.0, 1.0),
                   {"universal gaussian [-0.5,0] running mean", [](std::span<const double> x) {
                      return universal_inference(GaussianMeanFamily{1.0, -0.5, 0.0},
                                                 GaussianRunningMeanPlugin{1.0, 0.0, 1.0}, x)
                          .trace;
                    }}});
  cases.push_back({simlab::bernoulli_sampler(0.5),
                   {"mixture universal bernoulli [0,0.5] grid 0.6,0.75,0.9", [](std::span<const double> x) {
                      static const std::vector<PointModel> g{bernoulli(0.6), bernoulli(0.75), bernoulli(0.9)};
                      static const std::vector<double> w(3, 1.0 / 3.0);
                      return mixture_universal_trace(BernoulliFamily{0.0, 0.5}, g, w, x);
                    }}});
  cases.push_back({simlab::gaussian_sampler(0.0, 2.0),
                   {"t-test point prior delta 0.5, sigma 2", [](std::span<const double> x) {
                      static const TTestPrior prior = TTestPrior::point(0.5);
                      return ttest_eprocess(prior, x);
                    }}});
  return cases;
}

bool validity() {
  Criterion c(1, "e-variable validity of every families constructor");
  constexpr double kBudget = 120.0;
  std::uint64_t seed = 1000;
  for (const auto& nc : families_under_null()) {
    const auto start = Clock::now();
    const auto fixed = simlab::mc_stopped_mean(nc.null, nc.constructor, StoppingRule::fixed_horizon(100),
                                               config(++seed, 100000, 100));
    const auto crossing = simlab::mc_stopped_mean(nc.null, nc.constructor,
                                                  StoppingRule::first_crossing(20.0, 1000),
                                                  config(++seed, 100000, 1000));
    const double elapsed = seconds_since(start);
    c.check(fixed.within(1.0, 3.0), "%s: fixed(100) E[K] = %.5f +- %.5f", nc.constructor.label.c_str(),
            fixed.estimate, fixed.std_error);
    c.check(crossing.within(1.0, 3.0), "%s: crossing(20)@1000 E[K] = %.5f +- %.5f",
            nc.constructor.label.c_str(), crossing.estimate, crossing.std_error);
    c.check(elapsed < kBudget, "%s: %.1f s (budget %.0f s)", nc.constructor.label.c_str(), elapsed, kBudget);
  }
  return c.finish();
}

bool ville() {
  Criterion c(2, "Ville coverage at alpha 0.05, T 1000");
  const auto start = Clock::now();
  const families::BoundedMeanNull half(0.5);
  const std::vector<NullCase> cases{
      {simlab::bernoulli_sampler(0.5),
       {"lr bernoulli 0.5 vs 0.7",
        [](std::span<const double> x) {
          return families::lr_eprocess(families::bernoulli(0.5), families::bernoulli(0.7), x);
        }}},
      {simlab::bernoulli_sampler(0.5),
       {"bounded mean 0.5 agrapa",
        [half](std::span<const double> x) {
          return families::bounded_mean_eprocess(half, families::LambdaStrategy::agrapa(), x);
        }}},
      {simlab::bernoulli_sampler(0.5),
       {"kt compression", [](std::span<const double> x) {
          return compress::compression_eprocess(x, compress::KtCoder{});
        }}}};
  std::uint64_t seed = 2000;
  for (const auto& nc : cases) {
    const auto r = simlab::ville_coverage(nc.null, nc.constructor, config(++seed, 50000, 1000));
    c.check(r.within(0.05, 3.0), "%s: crossing frequency %.5f +- %.5f", nc.constructor.label.c_str(),
            r.estimate, r.std_error);
  }
  const double elapsed = seconds_since(start);
  c.check(elapsed < 300.0, "total %.1f s (budget 300 s)", elapsed);
  return c.finish();
}

bool exhaustive() {
  Criterion c(3, "exhaustive validity over all binary sequences");
  const auto start = Clock::now();
  constexpr std::size_t T = 12;
  const auto final_capital = [](const EProcessTrace& tr) { return tr.final_capital(); };

  const double lr = oracle::enumerate_binary(T, 0.5, [&](std::span<const double> x) {
    return final_capital(families::lr_eprocess(families::bernoulli(0.5), families::bernoulli(0.7), x));
  });
  c.check(lr <= 1.0 + 1e-9, "lr: E[K_12] = %.15f", lr);

  const families::BernoulliFamily family{0.2, 0.5};
  const std::vector<families::PointModel> grid{families::bernoulli(0.6), families::bernoulli(0.75),
                                               families::bernoulli(0.9)};
  const std::vector<double> weights(3, 1.0 / 3.0);
  for (double theta : {0.2, 0.3, 0.4, 0.5}) {
    const double u = oracle::enumerate_binary(T, theta, [&](std::span<const double> x) {
      return families::universal_inference(family, families::KtPlugin{}, x).value.value();
    });
    c.check(u <= 1.0 + 1e-9, "universal inference, theta %.1f: E[U_12] = %.15f", theta, u);
    const double v = oracle::enumerate_binary(T, theta, [&](std::span<const double> x) {
      return families::mixture_universal(family, grid, weights, x).value();
    });
    c.check(v <= 1.0 + 1e-9, "mixture universal, theta %.1f: E[V_12] = %.15f", theta, v);
  }

  for (double mu : {0.3, 0.5}) {
    const families::BoundedMeanNull null(mu);
    const double lambda = 0.8 * null.lambda_max();
    const double b = oracle::enumerate_binary(T, mu, [&](std::span<const double> x) {
      return final_capital(families::bounded_mean_eprocess(null, families::LambdaStrategy::fixed(lambda), x));
    });
    c.check(b <= 1.0 + 1e-9, "bounded mean %.1f fixed lambda %.3f: E[M_12] = %.15f", mu, lambda, b);
  }

  const double kt = oracle::enumerate_binary(T, 0.5, [&](std::span<const double> x) {
    return final_capital(compress::compression_eprocess(x, compress::KtCoder{}));
  });
  const double kraft = compress::kraft_check(T);
  c.check(kt <= 1.0 + 1e-9 && std::abs(kt - 1.0) <= 1e-10, "kt compression: E[K_12] = %.15f", kt);
  c.check(std::abs(kraft - 1.0) <= 1e-10, "kraft sum over 2^12 strings = %.15f", kraft);
  c.check(seconds_since(start) < 60.0, "%.1f s", seconds_since(start));
  return c.finish();
}

bool growth() {
  Criterion c(4, "growth-rate anchors");
  const double kl = 0.7 * std::log(0.7 / 0.5) + 0.3 * std::log(0.3 / 0.5);
  c.check(std::abs(kl - 0.082282) < 1e-6, "KL(0.7 || 0.5) = %.7f nats", kl);
  const Constructor lr{"lr", [](std::span<const double> x) {
                         return families::lr_eprocess(families::bernoulli(0.5), families::bernoulli(0.7), x);
                       }};
  const auto g = simlab::growth_rate(simlab::bernoulli_sampler(0.7), lr, config(4001, 10000, 500));
  c.check(std::abs(g.estimate - 0.082282) <= 3.0 * g.std_error, "lr growth %.6f +- %.6f nats/step", g.estimate,
          g.std_error);

  const double h = -(0.7 * std::log2(0.7) + 0.3 * std::log2(0.3));
  c.check(std::abs((1.0 - h) - 0.118709) < 1e-6, "1 - H(0.7) = %.7f bits", 1.0 - h);
  const Constructor kt{"kt", [](std::span<const double> x) {
                         return compress::compression_eprocess(x, compress::KtCoder{});
                       }};
  const auto k = simlab::growth_rate(simlab::bernoulli_sampler(0.7), kt, config(4002, 10000, 1000));
  const double bits = k.estimate / std::numbers::ln2;
  c.check(std::abs(bits - 0.118709) <= 0.02, "kt growth %.6f bits/symbol", bits);
  return c.finish();
}

bool optional_stopping() {
  Criterion c(5, "optional-stopping contrast");
  simlab::PHackingSpec spec;
  spec.max_n = 1000;
  const auto r = simlab::p_hacking_replay(spec, config(5001, 50000, 1000));
  c.check(r.naive.exceeds(0.05, 5.0), "naive z-test rejection %.5f +- %.5f", r.naive.estimate,
          r.naive.std_error);
  c.check(r.eprocess.within(0.05, 3.0), "e-process crossing %.5f +- %.5f", r.eprocess.estimate,
          r.eprocess.std_error);
  const auto glr = simlab::glr_inflation(simlab::GlrInflationSpec{}, config(5002, 50000, 1000));
  c.check(glr.exceeds(0.05, 5.0), "GLR crossing %.5f +- %.5f", glr.estimate, glr.std_error);
  return c.finish();
}

bool two_batch() {
  Criterion c(6, "two-batch continuation");
  const auto r = simlab::two_batch_replay(simlab::TwoBatchSpec{}, config(6001, 100000, 80));
  c.check(r.product_e.within(0.05, 3.0), "product e-value crossing %.5f +- %.5f", r.product_e.estimate,
          r.product_e.std_error);
  c.check(r.fisher.exceeds(0.05, 3.0), "Fisher rejection %.5f +- %.5f", r.fisher.estimate, r.fisher.std_error);
  std::printf("      continued %.5f, pooled %.5f, calibrated %.5f\n", r.continued.estimate, r.pooled.estimate,
              r.calibrated.estimate);
  return c.finish();
}

bool ttest() {
  Criterion c(7, "t-test e-process");
  const families::TTestPrior prior({-0.5, 0.5}, {0.5, 0.5});
  std::uint64_t seed = 7000;
  for (double sigma : {0.3, 1.0, 5.0}) {
    for (std::size_t t : {std::size_t{5}, std::size_t{20}}) {
      const Constructor bf{"ttest", [&prior](std::span<const double> x) { return families::ttest_eprocess(prior, x); }};
      const auto r = simlab::mc_stopped_mean(simlab::gaussian_sampler(0.0, sigma), bf,
                                             StoppingRule::fixed_horizon(t), config(++seed, 20000, t));
      c.check(r.within(1.0, 3.0), "sigma %.1f, t %zu: E[B_t] = %.5f +- %.5f", sigma, t, r.estimate, r.std_error);
    }
  }

  auto rng = Rng::for_stream(7100, 0);
  double worst_scale = 0.0;
  double worst_oracle = 0.0;
  for (int d = 0; d < 20; ++d) {
    const std::size_t n = 2 + static_cast<std::size_t>(29.0 * rng.uniform());
    const double mean = 2.0 * rng.uniform() - 1.0;
    const double sd = 0.1 + 3.0 * rng.uniform();
    std::vector<double> x(n);
    for (double& v : x) v = mean + sd * rng.normal();
    const auto base = families::ttest_eprocess(prior, x);
    for (double scale : {0.1, 7.0}) {
      std::vector<double> y(x);
      for (double& v : y) v *= scale;
      const auto scaled = families::ttest_eprocess(prior, y);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = base.capital()[i];
        const double b = scaled.capital()[i];
        worst_scale = std::max(worst_scale, std::abs(a - b) / a);
      }
    }
    const double want = oracle::ttest_riemann(prior.support(), prior.weights(), x);
    worst_oracle = std::max(worst_oracle, std::abs(base.final_capital() - want) / want);
  }
  c.check(worst_scale <= 1e-6, "scale invariance, c in {0.1, 7}: worst relative gap %.2e", worst_scale);
  c.check(worst_oracle <= 1e-5, "Riemann oracle on 20 datasets: worst relative gap %.2e", worst_oracle);
  return c.finish();
}

bool calibrators() {
  Criterion c(8, "calibrators");
  for (double kappa : {0.1, 0.5, 0.9}) {
    const auto r = calibrate::verify_calibrator(calibrate::Calibrator::power(kappa));
    c.check(r.valid && r.monotone && r.integral <= 1.0 + 1e-9, "power %.1f: integral %.12f", kappa, r.integral);
  }
  const auto m = calibrate::verify_calibrator(calibrate::Calibrator::mixture());
  c.check(m.valid && m.monotone && m.integral <= 1.0 + 1e-9, "mixture: integral %.12f", m.integral);
  const double p = std::exp(-2.0);
  const double got = calibrate::mixture_calibrator(p).value();
  const double closed = (std::exp(2.0) - 3.0) / 4.0;
  const double quad = oracle::mixture_calibrator(p);
  c.check(std::abs(got - closed) <= 1e-9 && std::abs(got - quad) <= 1e-9,
          "mixture at e^-2: %.12f, closed form %.12f, quadrature %.12f", got, closed, quad);
  return c.finish();
}

bool dominating() {
  Criterion c(9, "dominating likelihood ratio");
  auto rng = Rng::for_stream(9000, 0);
  double worst_sum = 0.0;
  double worst_dom = 0.0;
  double worst_eq = 0.0;
  int unit_tables = 0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t k = 1 + static_cast<std::size_t>(16.0 * rng.uniform());
    std::vector<double> mass(k);
    double total = 0.0;
    for (double& m : mass) total += (m = -std::log(1.0 - rng.uniform()));
    for (double& m : mass) m /= total;
    const FiniteSpace space(mass);
    std::vector<double> e(k);
    for (double& v : e) v = rng.uniform() < 0.2 ? 0.0 : -std::log(1.0 - rng.uniform());
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += mass[i] * e[i];
    if (mean == 0.0) {
      e[0] = 1.0;
      mean = mass[0];
    }
    // Even-numbered tables have exact unit mean, the rest mean below one.
    const bool unit = s % 2 == 0;
    const double target = unit ? 1.0 : rng.uniform();
    for (double& v : e) v *= target / mean;
    const auto q = dominating_lr(space, e);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sum += q.mass()[i];
      const double ratio = q.mass()[i] / mass[i];
      worst_dom = std::max(worst_dom, (e[i] - ratio) / std::max(1.0, e[i]));
      if (unit) worst_eq = std::max(worst_eq, std::abs(ratio - e[i]) / std::max(1.0, e[i]));
    }
    unit_tables += unit ? 1 : 0;
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  c.check(worst_sum <= 1e-9, "sum of q: worst |sum - 1| = %.2e", worst_sum);
  c.check(worst_dom <= 1e-9, "domination q/p >= e: worst shortfall %.2e", worst_dom);
  c.check(worst_eq <= 1e-9, "unit-mean tables (%d): worst |q/p - e| = %.2e", unit_tables, worst_eq);
  return c.finish();
}

std::string results_section(const std::string& report) {
  const auto begin = report.find("\"results\":");
  const auto end = report.find(",\"version\":");
  if (begin == std::string::npos || end == std::string::npos || end < begin) return {};
  return report.substr(begin, end - begin);
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "evlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool determinism() {
  Criterion c(10, "determinism across thread counts");
  const std::string dir = std::filesystem::temp_directory_path() / "evlab_acceptance";
  std::filesystem::create_directories(dir);
  const std::string bits = dir + "/bits.csv";
  const std::string reals = dir + "/reals.jsonl";
  const std::string pvals = dir + "/p.csv";
  {
    std::ofstream(bits) << "x,batch\n0,1\n1,1\n0,1\n1,2\n1,2\n1,2\n";
    std::ofstream(reals) << "{\"x\":0.4}\n{\"x\":-1.2}\n{\"x\":2.5}\n{\"x\":0.9}\n";
    std::ofstream(pvals) << "x,batch\n0.01,1\n0.2,1\n0.03,2\n";
  }
  const std::vector<std::vector<std::string>> commands{
      {"validate", "--model", "beta:2,2", "--constructor", "bounded_mean:0.5:agrapa", "--rule", "crossing",
       "--reps", "2000", "--horizon", "200"},
      {"validate", "--model", "gaussian:0,1", "--constructor", "ttest:0.5", "--reps", "300", "--horizon", "30"},
      {"ville", "--model", "bernoulli:0.5", "--constructor", "kt", "--reps", "2000", "--horizon", "300"},
      {"growth", "--model", "bernoulli:0.7", "--constructor", "lr:bernoulli:0.5,0.7", "--reps", "2000"},
      {"replay", "p-hacking", "--reps", "500", "--max-n", "300"},
      {"replay", "two-batch", "--reps", "5000"},
      {"replay", "glr-inflation", "--reps", "1000", "--max-n", "300"},
      {"replay", "two-ones", "--reps", "3000", "--input", bits},
      {"calibrate", "--input", pvals},
      {"compress", "--input", bits},
      {"glr", "--input", reals},
  };
  for (const auto& cmd : commands) {
    std::string label;
    for (const auto& a : cmd) label += (label.empty() ? "" : " ") + a;
    std::vector<std::string> one(cmd);
    std::vector<std::string> eight(cmd);
    for (auto* v : {&one, &eight}) v->insert(v->end(), {"--seed", "42", "--threads", v == &one ? "1" : "8"});
    const auto a = run_cli(one);
    const auto b = run_cli(eight);
    const auto ra = results_section(a.out);
    const auto rb = results_section(b.out);
    c.check(a.code == 0 && b.code == 0 && !ra.empty() && ra == rb, "%s (exit %d/%d, %zu bytes)", label.c_str(),
            a.code, b.code, ra.size());
    if (a.code != 0) std::printf("      %s", a.err.c_str());
  }
  return c.finish();
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  std::printf("evlab acceptance suite, kernels: %s\n", std::string(simd::isa_name(simd::active_isa())).c_str());
  std::fflush(stdout);
  const std::vector<std::function<bool()>> criteria{validity,    ville,       exhaustive,  growth,
                                                    optional_stopping, two_batch, ttest, calibrators,
                                                    dominating,  determinism};
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected[id - 1] = true;
  }
  int ran = 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    failed += criteria[i]() ? 0 : 1;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
