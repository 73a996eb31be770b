#include "evlab/cli/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "evlab/calibrate.hpp"
#include "evlab/cli/ingest.hpp"
#include "evlab/cli/specs.hpp"
#include "evlab/compress.hpp"
#include "evlab/errors.hpp"
#include "evlab/families.hpp"

namespace evlab::cli {
namespace {

const std::set<std::string> kCommands{"validate", "ville",    "growth", "replay",
                                      "calibrate", "compress", "glr"};
const std::set<std::string> kScenarios{"two-batch", "p-hacking", "glr-inflation", "two-ones"};

// ---------------------------------------------------------------------------
// Typed access to config-file values

std::string want_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config field '" + key + "': expected a string");
  return v.get<std::string>();
}

std::uint64_t want_uint(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw ConfigError("config field '" + key + "': expected a nonnegative integer");
}

double want_double(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config field '" + key + "': expected a number");
  return v.get<double>();
}

bool want_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config field '" + key + "': expected true or false");
  return v.get<bool>();
}

// ---------------------------------------------------------------------------
// Result objects

Json report_json(const simlab::SimReport& r) {
  Json j = Json::object();
  j["name"] = r.name;
  j["estimate"] = number(r.estimate);
  j["std_error"] = number(r.std_error);
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = meta;
  if (r.ruin_frequency) j["ruin_frequency"] = number(*r.ruin_frequency);
  return j;
}

Json trace_json(const EProcessTrace& trace, double scale) {
  Json arr = Json::array();
  for (double v : trace.log_capital()) arr.push_back(number(v * scale));
  return arr;
}

struct Group {
  std::string label;
  std::optional<std::int64_t> batch;
  std::vector<double> values;
};

std::vector<Group> input_groups(const RunConfig& c) {
  if (c.input.empty()) throw ConfigError("input: command '" + c.command + "' needs an input file");
  const Format fmt = c.format.empty() ? format_for_path(c.input)
                                      : (c.format == "jsonl" ? Format::jsonl : Format::csv);
  Dataset data = ingest(c.input, fmt);
  std::vector<Group> out;
  if (!data.has_batch) {
    out.push_back(Group{"all", std::nullopt, std::move(data.values)});
  } else {
    for (auto& b : data.batches) out.push_back(Group{"batch", b.id, std::move(b.values)});
  }
  return out;
}

void tag_batch(Json& j, const Group& g) {
  if (g.batch) j["batch"] = *g.batch;
}

calibrate::Calibrator parse_calibrator(const std::string& spec) {
  if (spec == "mixture") return calibrate::Calibrator::mixture();
  if (spec.rfind("power:", 0) == 0) {
    const auto k = parse_numbers(spec.substr(6), "calibrator");
    if (k.size() != 1 || !(k[0] > 0.0 && k[0] < 1.0)) {
      throw ConfigError("calibrator: power exponent must be one number in (0, 1)");
    }
    return calibrate::Calibrator::power(k[0]);
  }
  throw ConfigError("calibrator: unknown calibrator '" + spec + "'");
}

families::ParamSet parse_set(const std::string& text, const std::string& field) {
  auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const auto lo = parse_numbers(text.substr(0, dots), field);
      const auto hi = parse_numbers(text.substr(dots + 2), field);
      if (lo.size() != 1 || hi.size() != 1) throw ConfigError(field + ": expected lo..hi");
      return families::ParamSet::interval(lo[0], hi[0]);
    }
    return families::ParamSet::grid(parse_numbers(text, field));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

families::GlrFamily parse_glr_family(const std::string& spec) {
  if (spec == "bernoulli") return families::BernoulliParameter{};
  if (spec.rfind("gaussian:", 0) == 0) {
    const auto s = parse_numbers(spec.substr(9), "glr_family");
    if (s.size() != 1 || !(s[0] > 0.0)) throw ConfigError("glr_family: gaussian needs one positive sigma");
    return families::GaussianMeanParameter{s[0]};
  }
  throw ConfigError("glr_family: unknown family '" + spec + "'");
}

compress::ExternalMode parse_mode(const std::string& mode) {
  if (mode == "count") return compress::ExternalMode::count;
  if (mode == "bytes") return compress::ExternalMode::bytes;
  throw ConfigError("compressor_mode: expected count or bytes, got '" + mode + "'");
}

ExternalCompressor external_of(const RunConfig& c) {
  return ExternalCompressor{c.external_compressor, parse_mode(c.compressor_mode)};
}

// ---------------------------------------------------------------------------
// Commands

Json run_simulation(const RunConfig& c) {
  const ModelSpec model = parse_model(c.model);
  const ConstructorSpec ctor = parse_constructor(c.constructor, external_of(c));
  check_compatible(c.model, model, c.constructor, ctor);
  simlab::SimReport r;
  if (c.command == "validate") {
    const StoppingRule rule = c.rule == "fixed"
                                  ? StoppingRule::fixed_horizon(c.sim.horizon)
                                  : StoppingRule::first_crossing(1.0 / c.sim.alpha, c.sim.horizon);
    r = simlab::mc_stopped_mean(model.sampler, ctor.constructor, rule, c.sim);
  } else if (c.command == "ville") {
    r = simlab::ville_coverage(model.sampler, ctor.constructor, c.sim);
  } else {
    r = simlab::growth_rate(model.sampler, ctor.constructor, c.sim);
  }
  return Json::array({report_json(r)});
}

Json run_replay(const RunConfig& c) {
  Json out = Json::array();
  if (c.scenario == "two-batch") {
    simlab::TwoBatchSpec spec;
    spec.n1 = c.n1;
    spec.n2 = c.n2;
    spec.promising_upper = c.promising_upper;
    spec.never_continue = c.never_continue;
    spec.sigma = c.sigma;
    spec.calibrator = parse_calibrator(c.calibrator);
    const auto r = simlab::two_batch_replay(spec, c.sim);
    for (const auto* s : {&r.fisher, &r.pooled, &r.product_e, &r.calibrated, &r.continued}) {
      out.push_back(report_json(*s));
    }
  } else if (c.scenario == "p-hacking") {
    simlab::PHackingSpec spec;
    spec.max_n = c.max_n;
    spec.sigma = c.sigma;
    const auto r = simlab::p_hacking_replay(spec, c.sim);
    out.push_back(report_json(r.naive));
    out.push_back(report_json(r.eprocess));
  } else if (c.scenario == "glr-inflation") {
    simlab::GlrInflationSpec spec;
    spec.max_n = c.max_n;
    spec.sigma = c.sigma;
    const auto alt = parse_set(c.alt_set, "alt_set");
    if (!alt.is_interval()) throw ConfigError("alt_set: glr-inflation needs an interval lo..hi");
    spec.alt_lo = alt.lo();
    spec.alt_hi = alt.hi();
    out.push_back(report_json(simlab::glr_inflation(spec, c.sim)));
  } else {
    simlab::TwoOnesSpec spec;
    spec.max_n = c.max_n;
    spec.alt_theta = c.alt_theta;
    if (!c.input.empty()) {
      auto groups = input_groups(c);
      spec.observed.clear();
      for (const auto& g : groups) spec.observed.insert(spec.observed.end(), g.values.begin(), g.values.end());
    }
    const auto r = simlab::two_ones_replay(spec, c.sim);
    out.push_back(report_json(r.stopped_lr));
    out.push_back(report_json(r.lr_crossing));
    out.push_back(report_json(r.naive_binomial));
    Json obs = Json::object();
    obs["name"] = "two_ones_observed";
    obs["n"] = spec.observed.size();
    obs["lr"] = number(r.observed_lr);
    obs["p_fixed"] = number(r.observed_p_fixed);
    obs["p_stopping"] = number(r.observed_p_stopping);
    out.push_back(obs);
  }
  return out;
}

Json run_calibrate(const RunConfig& c) {
  const auto cal = parse_calibrator(c.calibrator);
  Json out = Json::array();
  const auto rep = calibrate::verify_calibrator(cal);
  Json v = Json::object();
  v["name"] = "verify_calibrator";
  v["calibrator"] = cal.describe();
  v["monotone"] = rep.monotone;
  v["integral"] = number(rep.integral);
  v["valid"] = rep.valid;
  out.push_back(v);
  if (c.input.empty()) return out;
  for (const auto& g : input_groups(c)) {
    for (double p : g.values) {
      if (!(p > 0.0 && p <= 1.0)) throw DataError("input: p-value " + std::to_string(p) + " outside (0, 1]");
      const auto e = cal(p);
      Json row = Json::object();
      row["name"] = "calibrated";
      row["p"] = number(p);
      row["e"] = number(e.value());
      tag_batch(row, g);
      out.push_back(row);
    }
    Json f = Json::object();
    f["name"] = "fisher";
    f["k"] = g.values.size();
    f["p"] = number(calibrate::fisher_combine(g.values));
    tag_batch(f, g);
    out.push_back(f);
  }
  return out;
}

Json run_compress(const RunConfig& c) {
  std::string coder_spec = c.constructor == "constant" ? "kt" : c.constructor;
  if (!c.external_compressor.empty()) coder_spec = "external";
  const ConstructorSpec coder = parse_constructor(coder_spec, external_of(c));
  if (coder_spec != "kt" && coder_spec != "external" && coder_spec.rfind("zlib", 0) != 0) {
    throw ConfigError("constructor: compress needs kt, zlib[:level] or external, got '" + coder_spec + "'");
  }
  Json out = Json::array();
  for (const auto& g : input_groups(c)) {
    const auto trace = coder.constructor.build(g.values);
    const double n = static_cast<double>(g.values.size());
    const double log2_final = trace.final_log_capital() / std::log(2.0);
    Json r = Json::object();
    r["name"] = "compress";
    r["coder"] = coder.constructor.label;
    r["n"] = g.values.size();
    r["log2_capital"] = trace_json(trace, 1.0 / std::log(2.0));
    r["final_log2_capital"] = number(log2_final);
    r["code_length_bits"] = number(n - log2_final);
    r["capital"] = number(trace.final_capital());
    tag_batch(r, g);
    out.push_back(r);
  }
  return out;
}

Json run_glr(const RunConfig& c) {
  const auto family = parse_glr_family(c.glr_family);
  const auto null_set = parse_set(c.null_set, "null_set");
  const auto alt_set = parse_set(c.alt_set, "alt_set");
  Json out = Json::array();
  for (const auto& g : input_groups(c)) {
    const auto num = families::sup_log_likelihood(alt_set, family, g.values);
    const auto den = families::sup_log_likelihood(null_set, family, g.values);
    const double lg = families::log_glr(null_set, alt_set, family, g.values);
    Json r = Json::object();
    r["name"] = "glr";
    r["n"] = g.values.size();
    r["log_glr"] = number(lg);
    r["glr"] = number(std::exp(lg));
    r["alt_argmax"] = number(num.argmax);
    r["null_argmax"] = number(den.argmax);
    r["null_set"] = null_set.describe();
    r["alt_set"] = alt_set.describe();
    tag_batch(r, g);
    out.push_back(r);
  }
  return out;
}

std::string csv_cell(const Json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return canonical_dump(v);
}

std::string table_path(const std::string& out) {
  auto slash = out.find_last_of('/');
  auto dot = out.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  if (has_ext && out.substr(dot) == ".csv") return out.substr(0, dot) + ".table.csv";
  return (has_ext ? out.substr(0, dot) : out) + ".csv";
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

Json RunConfig::to_json() const {
  Json j = Json::object();
  j["command"] = command;
  j["scenario"] = scenario;
  j["model"] = model;
  j["constructor"] = constructor;
  j["rule"] = rule;
  j["seed"] = sim.seed;
  j["reps"] = sim.reps;
  j["horizon"] = sim.horizon;
  j["alpha"] = sim.alpha;
  j["threads"] = sim.threads;
  j["input"] = input;
  j["format"] = format;
  j["out"] = out;
  j["table"] = table;
  j["external_compressor"] = external_compressor;
  j["compressor_mode"] = compressor_mode;
  j["calibrator"] = calibrator;
  j["glr_family"] = glr_family;
  j["null_set"] = null_set;
  j["alt_set"] = alt_set;
  j["max_n"] = max_n;
  j["n1"] = n1;
  j["n2"] = n2;
  j["promising_upper"] = promising_upper;
  j["never_continue"] = never_continue;
  j["sigma"] = sigma;
  j["alt_theta"] = alt_theta;
  return j;
}

void RunConfig::merge_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "command") command = want_string(v, key);
    else if (key == "scenario") scenario = want_string(v, key);
    else if (key == "model") model = want_string(v, key);
    else if (key == "constructor") constructor = want_string(v, key);
    else if (key == "rule") rule = want_string(v, key);
    else if (key == "seed") sim.seed = want_uint(v, key);
    else if (key == "reps") sim.reps = want_uint(v, key);
    else if (key == "horizon") sim.horizon = want_uint(v, key);
    else if (key == "alpha") sim.alpha = want_double(v, key);
    else if (key == "threads") sim.threads = want_uint(v, key);
    else if (key == "input") input = want_string(v, key);
    else if (key == "format") format = want_string(v, key);
    else if (key == "out") out = want_string(v, key);
    else if (key == "table") table = want_bool(v, key);
    else if (key == "external_compressor") external_compressor = want_string(v, key);
    else if (key == "compressor_mode") compressor_mode = want_string(v, key);
    else if (key == "calibrator") calibrator = want_string(v, key);
    else if (key == "glr_family") glr_family = want_string(v, key);
    else if (key == "null_set") null_set = want_string(v, key);
    else if (key == "alt_set") alt_set = want_string(v, key);
    else if (key == "max_n") max_n = want_uint(v, key);
    else if (key == "n1") n1 = want_uint(v, key);
    else if (key == "n2") n2 = want_uint(v, key);
    else if (key == "promising_upper") promising_upper = want_double(v, key);
    else if (key == "never_continue") never_continue = want_bool(v, key);
    else if (key == "sigma") sigma = want_double(v, key);
    else if (key == "alt_theta") alt_theta = want_double(v, key);
    else throw ConfigError("config field '" + key + "': unknown key");
  }
}

void RunConfig::validate() const {
  if (command.empty()) throw ConfigError("command: missing");
  if (!kCommands.count(command)) throw ConfigError("command: unknown command '" + command + "'");
  if (command == "replay" && !kScenarios.count(scenario)) {
    throw ConfigError("scenario: unknown replay scenario '" + scenario +
                      "' (two-batch, p-hacking, glr-inflation, two-ones)");
  }
  if (command != "replay" && !scenario.empty()) {
    throw ConfigError("scenario: only the replay command takes a scenario");
  }
  if (rule != "fixed" && rule != "crossing") throw ConfigError("rule: expected fixed or crossing");
  if (!format.empty() && format != "csv" && format != "jsonl") {
    throw ConfigError("format: expected csv or jsonl");
  }
  if (table && out.empty()) throw ConfigError("table: --table needs --out");
  parse_mode(compressor_mode);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma: must be positive");
  if (!(alt_theta > 0.0 && alt_theta < 1.0)) throw ConfigError("alt_theta: must lie in (0, 1)");
  if (!(promising_upper >= 0.0 && promising_upper <= 1.0)) {
    throw ConfigError("promising_upper: must lie in [0, 1]");
  }
  if (n1 == 0) throw ConfigError("n1: must be positive");
  sim.validate();
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("results")) return j["config"];
  return j;
}

bool parse_command_line(int argc, const char* const* argv, RunConfig& config, std::ostream& out) {
  CLI::App app{"Anytime-valid testing laboratory", "evlab"};
  app.set_version_flag("--version", kVersion);

  std::string command, scenario, config_path, model, constructor, rule, input, format, out_path;
  std::string external, mode, calibrator, glr_family, null_set, alt_set;
  std::uint64_t seed = 0;
  std::size_t reps = 0, horizon = 0, threads = 0, max_n = 0, n1 = 0, n2 = 0;
  double alpha = 0, promising_upper = 0, sigma = 0, alt_theta = 0;
  bool table = false, never_continue = false;

  app.add_option("command", command, "validate | ville | growth | replay | calibrate | compress | glr");
  app.add_option("scenario", scenario, "replay scenario: two-batch | p-hacking | glr-inflation | two-ones");
  app.add_option("--config", config_path, "JSON config file (or a previous report)");
  app.add_option("--seed", seed);
  app.add_option("--reps", reps);
  app.add_option("--horizon", horizon);
  app.add_option("--alpha", alpha);
  app.add_option("--threads", threads);
  app.add_option("--out", out_path, "report path (stdout when absent)");
  app.add_flag("--table", table, "also write a CSV table next to the report");
  app.add_option("--model", model, "bernoulli:theta | gaussian:mean,sd | beta:a,b");
  app.add_option("--constructor", constructor, "e-process constructor spec");
  app.add_option("--rule", rule, "validate stopping rule: fixed | crossing");
  app.add_option("--input", input, "observation file (csv or jsonl)");
  app.add_option("--format", format, "csv | jsonl");
  app.add_option("--external-compressor", external, "shell command reading stdin");
  app.add_option("--compressor-mode", mode, "count | bytes");
  app.add_option("--calibrator", calibrator, "mixture | power:kappa");
  app.add_option("--glr-family", glr_family, "bernoulli | gaussian:sigma");
  app.add_option("--null-set", null_set, "lo..hi or comma-separated grid");
  app.add_option("--alt-set", alt_set, "lo..hi or comma-separated grid");
  app.add_option("--max-n", max_n);
  app.add_option("--n1", n1);
  app.add_option("--n2", n2);
  app.add_option("--promising-upper", promising_upper);
  app.add_flag("--never-continue", never_continue);
  app.add_option("--sigma", sigma);
  app.add_option("--alt-theta", alt_theta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, out);
    return false;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("arguments: ") + e.what());
  }

  RunConfig c;
  if (!config_path.empty()) c.merge_json(load_config_file(config_path));
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("command")) c.command = command;
  if (given("scenario")) c.scenario = scenario;
  if (given("--seed")) c.sim.seed = seed;
  if (given("--reps")) c.sim.reps = reps;
  if (given("--horizon")) c.sim.horizon = horizon;
  if (given("--alpha")) c.sim.alpha = alpha;
  if (given("--threads")) c.sim.threads = threads;
  if (given("--out")) c.out = out_path;
  if (given("--table")) c.table = table;
  if (given("--model")) c.model = model;
  if (given("--constructor")) c.constructor = constructor;
  if (given("--rule")) c.rule = rule;
  if (given("--input")) c.input = input;
  if (given("--format")) c.format = format;
  if (given("--external-compressor")) c.external_compressor = external;
  if (given("--compressor-mode")) c.compressor_mode = mode;
  if (given("--calibrator")) c.calibrator = calibrator;
  if (given("--glr-family")) c.glr_family = glr_family;
  if (given("--null-set")) c.null_set = null_set;
  if (given("--alt-set")) c.alt_set = alt_set;
  if (given("--max-n")) c.max_n = max_n;
  if (given("--n1")) c.n1 = n1;
  if (given("--n2")) c.n2 = n2;
  if (given("--promising-upper")) c.promising_upper = promising_upper;
  if (given("--never-continue")) c.never_continue = never_continue;
  if (given("--sigma")) c.sigma = sigma;
  if (given("--alt-theta")) c.alt_theta = alt_theta;
  config = std::move(c);
  return true;
}

// ---------------------------------------------------------------------------
// Running

Json run(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Json results;
  const auto& cmd = config.command;
  if (cmd == "validate" || cmd == "ville" || cmd == "growth") results = run_simulation(config);
  else if (cmd == "replay") results = run_replay(config);
  else if (cmd == "calibrate") results = run_calibrate(config);
  else if (cmd == "compress") results = run_compress(config);
  else results = run_glr(config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Json report = Json::object();
  report["config"] = config.to_json();
  report["results"] = std::move(results);
  report["wall_time"] = wall;
  report["version"] = kVersion;
  return report;
}

std::string results_table(const Json& results) {
  std::set<std::string> keys;
  for (const auto& r : results) {
    for (const auto& [k, v] : r.items()) {
      if (!v.is_structured() && k != "name") keys.insert(k);
    }
  }
  std::ostringstream os;
  os << "name";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  for (const auto& r : results) {
    os << csv_cell(r.value("name", Json("")));
    for (const auto& k : keys) {
      os << ',';
      if (auto it = r.find(k); it != r.end() && !it->is_structured()) os << csv_cell(*it);
    }
    os << '\n';
  }
  return os.str();
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    RunConfig config;
    if (!parse_command_line(argc, argv, config, out)) return 0;
    const Json report = run(config);
    const std::string text = canonical_dump(report) + "\n";
    if (config.out.empty()) {
      out << text;
    } else {
      std::ofstream f(config.out, std::ios::binary);
      if (!f || !(f << text)) throw ConfigError("out: cannot write '" + config.out + "'");
    }
    if (config.table) {
      const std::string path = table_path(config.out);
      std::ofstream f(path, std::ios::binary);
      if (!f || !(f << results_table(report["results"]))) {
        throw ConfigError("table: cannot write '" + path + "'");
      }
    }
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code(std::current_exception());
    const char* kind = code == 2 ? "configuration error" : code == 3 ? "data error"
                     : code == 4 ? "numerical error" : "error";
    err << "evlab: " << kind << ": " << e.what() << '\n';
    return code;
  }
}

int exit_code(std::exception_ptr error) noexcept {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return 2;
  } catch (const DataError&) {
    return 3;
  } catch (const NumericalError&) {
    return 4;
  } catch (const std::invalid_argument&) {
    return 2;
  } catch (...) {
    return 1;
  }
}

}  // namespace evlab::cli
