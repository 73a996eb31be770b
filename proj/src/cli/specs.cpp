#include "evlab/cli/specs.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "evlab/errors.hpp"
#include "evlab/families.hpp"

namespace evlab::cli {
namespace {

using families::PointModel;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::string& field) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x)) {
    throw ConfigError(field + ": '" + s + "' is not a finite number");
  }
  return x;
}

std::vector<double> numbers(const std::string& text, std::size_t count, const std::string& field,
                            const std::string& shape) {
  auto v = parse_numbers(text, field);
  if (v.size() != count) throw ConfigError(field + ": expected " + shape + ", got '" + text + "'");
  return v;
}

[[noreturn]] void bad(const std::string& field, const std::string& spec, const std::string& why) {
  throw ConfigError(field + ": invalid spec '" + spec + "': " + why);
}

// Runs a factory, turning parameter validation failures into ConfigError.
template <typename F>
auto guarded(const std::string& field, const std::string& spec, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    bad(field, spec, e.what());
  }
}

ConstructorSpec from_trace(std::string label, Domain accepts,
                           std::function<EProcessTrace(std::span<const double>)> build) {
  return ConstructorSpec{simlab::Constructor{std::move(label), std::move(build)}, accepts};
}

ConstructorSpec parse_universal(const std::vector<std::string>& parts, const std::string& spec) {
  const std::string field = "constructor";
  if (parts.size() < 4) bad(field, spec, "expected universal:<family>:<params>:<plugin>");
  families::NullFamily family;
  Domain domain = Domain::real;
  if (parts[1] == "bernoulli") {
    auto p = numbers(parts[2], 2, field, "lo,hi");
    family = families::BernoulliFamily{p[0], p[1]};
    domain = Domain::binary;
  } else if (parts[1] == "gaussian") {
    auto p = numbers(parts[2], 3, field, "sigma,lo,hi");
    family = families::GaussianMeanFamily{p[0], p[1], p[2]};
  } else {
    bad(field, spec, "unknown null family '" + parts[1] + "'");
  }
  families::Plugin plugin;
  const std::string& kind = parts[3];
  if (kind == "kt" && parts.size() == 4 && domain == Domain::binary) {
    plugin = families::KtPlugin{};
  } else if (kind == "running" && parts.size() == 4 && domain == Domain::real) {
    plugin = families::GaussianRunningMeanPlugin{std::get<families::GaussianMeanFamily>(family).sigma,
                                                 0.0, 1.0};
  } else if (kind == "fixed" && parts.size() == 5) {
    const double v = numbers(parts[4], 1, field, "one parameter")[0];
    plugin = guarded(field, spec, [&]() -> families::Plugin {
      if (domain == Domain::binary) return families::FixedPlugin{families::bernoulli(v)};
      return families::FixedPlugin{
          families::gaussian(v, std::get<families::GaussianMeanFamily>(family).sigma)};
    });
  } else {
    bad(field, spec, "unknown plugin '" + kind + "' for this family");
  }
  guarded(field, spec, [&] {
    families::validate(family);
    return 0;
  });
  return from_trace(spec, domain, [family, plugin](std::span<const double> data) {
    return families::universal_inference(family, plugin, data).trace;
  });
}

ConstructorSpec parse_ttest(const std::string& body, const std::string& spec) {
  std::vector<double> support;
  std::vector<double> weights;
  bool weighted = false;
  for (const auto& atom : split(body, ',')) {
    auto at = atom.find('@');
    if (at == std::string::npos) {
      support.push_back(parse_number(atom, "constructor"));
      weights.push_back(1.0);
    } else {
      support.push_back(parse_number(atom.substr(0, at), "constructor"));
      weights.push_back(parse_number(atom.substr(at + 1), "constructor"));
      weighted = true;
    }
  }
  if (support.size() == 1 && !weighted) weights = {1.0};
  auto prior = guarded("constructor", spec, [&] { return families::TTestPrior(support, weights); });
  return from_trace(spec, Domain::real, [prior](std::span<const double> data) {
    return families::ttest_eprocess(prior, data);
  });
}

}  // namespace

std::string to_string(Domain d) {
  switch (d) {
    case Domain::binary: return "binary";
    case Domain::unit: return "unit-interval";
    case Domain::real: return "real-valued";
  }
  return "?";
}

std::vector<double> parse_numbers(const std::string& text, const std::string& field) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_number(s, field));
  return out;
}

ModelSpec parse_model(const std::string& spec) {
  const std::string field = "model";
  auto colon = spec.find(':');
  if (colon == std::string::npos) bad(field, spec, "expected <family>:<params>");
  const std::string name = spec.substr(0, colon);
  const std::string params = spec.substr(colon + 1);
  try {
    if (name == "bernoulli") {
      auto p = numbers(params, 1, field, "theta");
      return {simlab::bernoulli_sampler(p[0]), Domain::binary};
    }
    if (name == "gaussian") {
      auto p = numbers(params, 2, field, "mean,sd");
      return {simlab::gaussian_sampler(p[0], p[1]), Domain::real};
    }
    if (name == "beta") {
      auto p = numbers(params, 2, field, "a,b");
      return {simlab::beta_sampler(p[0], p[1]), Domain::unit};
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(field + ":", 0) == 0) throw;
    bad(field, spec, what);
  }
  bad(field, spec, "unknown model family '" + name + "'");
}

ConstructorSpec parse_constructor(const std::string& spec, const ExternalCompressor& external) {
  const std::string field = "constructor";
  const auto parts = split(spec, ':');
  const std::string& head = parts[0];

  if (spec == "constant") return {simlab::constant_constructor(), Domain::real};

  if (head == "lr" && parts.size() == 3) {
    PointModel null;
    PointModel alt;
    Domain domain;
    if (parts[1] == "bernoulli") {
      auto p = numbers(parts[2], 2, field, "p0,p1");
      guarded(field, spec, [&] {
        null = families::bernoulli(p[0]);
        alt = families::bernoulli(p[1]);
        return 0;
      });
      domain = Domain::binary;
    } else if (parts[1] == "gaussian") {
      auto p = numbers(parts[2], 3, field, "mu0,mu1,sigma");
      guarded(field, spec, [&] {
        null = families::gaussian(p[0], p[2]);
        alt = families::gaussian(p[1], p[2]);
        return 0;
      });
      domain = Domain::real;
    } else {
      bad(field, spec, "unknown likelihood-ratio family '" + parts[1] + "'");
    }
    return from_trace(spec, domain, [null, alt](std::span<const double> data) {
      return families::lr_eprocess(null, alt, data);
    });
  }

  if (head == "gaussian_evar" && parts.size() == 2) {
    auto p = numbers(parts[1], 2, field, "lambda,sigma");
    if (!(p[1] > 0.0)) bad(field, spec, "sigma must be positive");
    return from_trace(spec, Domain::real, [l = p[0], s = p[1]](std::span<const double> data) {
      return families::gaussian_eprocess(l, s, data);
    });
  }

  if (head == "gaussian_mixture" && parts.size() == 2) {
    const double sigma = numbers(parts[1], 1, field, "sigma")[0];
    if (!(sigma > 0.0)) bad(field, spec, "sigma must be positive");
    auto grid = simlab::default_lambda_grid();
    return from_trace(spec, Domain::real, [grid, sigma](std::span<const double> data) {
      return families::gaussian_mixture_eprocess(grid.lambdas, grid.weights, sigma, data);
    });
  }

  if (head == "bounded_mean" && parts.size() >= 3) {
    const double mu = numbers(parts[1], 1, field, "mu")[0];
    auto null = guarded(field, spec, [&] { return families::BoundedMeanNull(mu); });
    std::optional<families::LambdaStrategy> strategy;
    if (parts[2] == "agrapa" && parts.size() == 3) {
      strategy = families::LambdaStrategy::agrapa();
    } else if (parts[2] == "fixed" && parts.size() == 4) {
      const double lambda = numbers(parts[3], 1, field, "lambda")[0];
      if (!(lambda >= null.lambda_min() && lambda <= null.lambda_max())) {
        bad(field, spec, "lambda outside [-1/(1-mu), 1/mu]");
      }
      strategy = families::LambdaStrategy::fixed(lambda);
    } else {
      bad(field, spec, "expected bounded_mean:mu:agrapa or bounded_mean:mu:fixed:lambda");
    }
    return from_trace(spec, Domain::unit, [null, s = *strategy](std::span<const double> data) {
      return families::bounded_mean_eprocess(null, s, data);
    });
  }

  if (head == "universal") return parse_universal(parts, spec);

  if (head == "mixture" && parts.size() == 4 && parts[1] == "bernoulli") {
    auto range = numbers(parts[2], 2, field, "lo,hi");
    families::NullFamily family = families::BernoulliFamily{range[0], range[1]};
    guarded(field, spec, [&] {
      families::validate(family);
      return 0;
    });
    std::vector<PointModel> grid;
    for (double theta : parse_numbers(parts[3], field)) {
      grid.push_back(guarded(field, spec, [&] { return families::bernoulli(theta); }));
    }
    std::vector<double> weights(grid.size(), 1.0 / static_cast<double>(grid.size()));
    return from_trace(spec, Domain::binary, [family, grid, weights](std::span<const double> data) {
      return families::mixture_universal_trace(family, grid, weights, data);
    });
  }

  if (head == "ttest" && parts.size() == 2) return parse_ttest(parts[1], spec);

  if (spec == "kt") {
    return from_trace(spec, Domain::binary, [](std::span<const double> data) {
      return compress::compression_eprocess(data, compress::KtCoder{});
    });
  }

  if (head == "zlib" && parts.size() <= 2) {
    int level = 9;
    if (parts.size() == 2) {
      const double v = numbers(parts[1], 1, field, "level")[0];
      if (v != std::floor(v) || v < 0 || v > 9) bad(field, spec, "zlib level must be an integer in 0..9");
      level = static_cast<int>(v);
    }
    compress::Coder coder = compress::zlib_adapter(level);
    return from_trace(spec, Domain::binary, [coder](std::span<const double> data) {
      return compress::compression_eprocess(data, coder);
    });
  }

  if (spec == "external") {
    if (external.command.empty()) {
      bad(field, spec, "needs external_compressor to be set");
    }
    compress::Coder coder = compress::external_adapter(external.command, external.mode);
    return from_trace("external:" + external.command, Domain::binary,
                      [coder](std::span<const double> data) {
                        return compress::compression_eprocess(data, coder);
                      });
  }

  bad(field, spec, "unknown constructor");
}

void check_compatible(const std::string& model_text, const ModelSpec& model,
                      const std::string& constructor_text, const ConstructorSpec& constructor) {
  if (static_cast<int>(model.support) > static_cast<int>(constructor.accepts)) {
    throw ConfigError("constructor/model mismatch: constructor '" + constructor_text + "' accepts " +
                      to_string(constructor.accepts) + " data but model '" + model_text +
                      "' produces " + to_string(model.support) + " data");
  }
}

}  // namespace evlab::cli
