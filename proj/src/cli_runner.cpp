#include "qmetro/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "qmetro/estimator.hpp"
#include "qmetro/rng.hpp"
#include "qmetro/scenarios.hpp"
#include "qmetro/version.hpp"

namespace qmetro::cli {

namespace {

constexpr const char* kUsage = R"(usage:
  qmetro list
  qmetro scenario <name> [param=value ...] [flags]
  qmetro study    <name> [param=value ...] [--mlist 10,30,100] [--r N] [--b N]
                  [--estimator bayes|mle] [--prior-lo X] [--prior-hi X]
                  [--dump-posterior PATH] [flags]
  qmetro sweep    <name> --param NAME --from X --to Y --steps N
                  [param=value ...] [flags]

flags: --seed S  --nmax N  --format table|csv|json  --out PATH  --config PATH

The scenario command exits 0 when every computed value meets its target,
1 on a tolerance failure, 2 on usage errors.  CSV and JSON files carry a
`key=value` metadata header; passing such a file back via --config re-runs
the identical configuration.
)";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string json_num(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt(v);
}

std::string json_str(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("invalid numeric value for " + key + ": '" + v + "'");
  }
}

// Real-valued inputs are pinned to their 15-significant-digit serialization
// before any computation, so an emitted metadata header replays exactly.
double quantize(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return std::stod(buf);
}

long parse_long(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  const long l = std::lround(d);
  if (std::abs(d - static_cast<double>(l)) > 1e-9) throw UsageError(key + " must be an integer");
  return l;
}

// Key=value store with defaults < config file < command line precedence.
class Settings {
public:
  void set_cli(const std::string& k, const std::string& v) { cli_[k] = v; }
  void set_config(const std::string& k, const std::string& v) { config_[k] = v; }
  bool provided(const std::string& k) const { return cli_.count(k) || config_.count(k); }

  std::string str(const std::string& k, const std::string& fallback) const {
    if (auto it = cli_.find(k); it != cli_.end()) return it->second;
    if (auto it = config_.find(k); it != config_.end()) return it->second;
    return fallback;
  }
  double num(const std::string& k, double fallback) const {
    return provided(k) ? parse_double(k, str(k, "")) : fallback;
  }
  long integer(const std::string& k, long fallback) const {
    return provided(k) ? parse_long(k, str(k, "")) : fallback;
  }

private:
  std::map<std::string, std::string> cli_, config_;
};

// Accepts plain `key=value` lines as well as the `# key=value` metadata
// header of an emitted CSV, so an output file can be replayed directly.
void load_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) line = line.substr(2);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    const std::string key = line.substr(0, eq);
    if (key.find_first_of(", \t\"{") != std::string::npos) continue;  // data row or JSON
    if (key == "qmetro_version") continue;
    s.set_config(key, line.substr(eq + 1));
  }
}

std::vector<long> parse_mlist(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(parse_long("mlist", tok));
    if (out.back() < 1) throw UsageError("mlist entries must be >= 1");
  }
  if (out.empty()) throw UsageError("mlist is empty");
  return out;
}

struct OutputTarget {
  std::ostream* os;
  std::ofstream file;

  explicit OutputTarget(const std::string& path) {
    if (path.empty()) {
      os = &std::cout;
    } else {
      file.open(path, std::ios::binary);
      if (!file) throw UsageError("cannot open output file " + path);
      os = &file;
    }
  }
};

void emit_meta_csv(std::ostream& os, const std::map<std::string, std::string>& meta) {
  os << "# qmetro_version=" << kVersion << "\n";
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

void emit_meta_json(std::ostream& os, const std::map<std::string, std::string>& meta) {
  os << "\"meta\":{";
  os << json_str("qmetro_version") << ":" << json_str(kVersion);
  for (const auto& [k, v] : meta) os << "," << json_str(k) << ":" << json_str(v);
  os << "}";
}

// ---------------------------------------------------------------------------

struct ParsedArgs {
  std::string command;
  std::string scenario;
  std::map<std::string, std::string> params_cli;
  Settings settings;
  std::string out_path;
  std::string dump_posterior;
};

ParsedArgs parse_args(const std::vector<std::string>& args) {
  ParsedArgs p;
  if (args.empty()) throw UsageError("missing command");
  p.command = args[0];

  const std::map<std::string, std::string> flag_keys = {
      {"--seed", "seed"},         {"--nmax", "nmax"},         {"--format", "format"},
      {"--mlist", "mlist"},       {"--r", "r"},               {"--b", "b"},
      {"--estimator", "estimator"}, {"--prior-lo", "prior_lo"}, {"--prior-hi", "prior_hi"},
      {"--param", "sweep_param"}, {"--from", "sweep_from"},   {"--to", "sweep_to"},
      {"--steps", "sweep_steps"}};

  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--help" || a == "-h") throw UsageError("help");
    if (a == "--out" || a == "--config" || a == "--dump-posterior" || flag_keys.count(a)) {
      if (i + 1 >= args.size()) throw UsageError("flag " + a + " needs a value");
      const std::string& v = args[++i];
      if (a == "--out")
        p.out_path = v;
      else if (a == "--config")
        config_path = v;
      else if (a == "--dump-posterior")
        p.dump_posterior = v;
      else
        p.settings.set_cli(flag_keys.at(a), v);
      continue;
    }
    if (a.rfind("--", 0) == 0) throw UsageError("unknown flag " + a);
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      p.params_cli[a.substr(0, eq)] = a.substr(eq + 1);
      continue;
    }
    if (p.scenario.empty()) {
      p.scenario = a;
      continue;
    }
    throw UsageError("unexpected argument " + a);
  }

  if (!config_path.empty()) load_config(config_path, p.settings);
  if (p.scenario.empty()) p.scenario = p.settings.str("scenario", "");
  const std::string cfg_cmd = p.settings.str("command", p.command);
  if (cfg_cmd != p.command) throw UsageError("config was written by command '" + cfg_cmd + "'");
  return p;
}

// Resolves scenario parameters with precedence and rejects unknown names
// before any computation starts.
std::map<std::string, double> resolve_params(const ScenarioDef& def, const ParsedArgs& args) {
  std::map<std::string, double> out;
  for (const auto& sp : def.params) out[sp.name] = args.settings.num(sp.name, sp.default_value);
  for (const auto& [k, v] : args.params_cli) {
    if (!out.count(k)) throw UsageError("unknown parameter '" + k + "' for scenario " + def.name);
    out[k] = parse_double(k, v);
  }
  for (auto& [k, v] : out) v = quantize(v);
  return out;
}

std::map<std::string, std::string> base_meta(const std::string& command, const ScenarioDef& def,
                                             const std::map<std::string, double>& params, int nmax,
                                             std::uint64_t seed, const std::string& format) {
  std::map<std::string, std::string> meta;
  meta["command"] = command;
  meta["scenario"] = def.name;
  for (const auto& [k, v] : params) meta[k] = fmt(v);
  meta["nmax"] = std::to_string(nmax);
  meta["seed"] = std::to_string(seed);
  meta["format"] = format;
  return meta;
}

// ---------------------------------------------------------------------------

int cmd_list() {
  for (const auto& d : scenario_registry()) {
    std::cout << d.name << "  -  " << d.summary << "\n";
    for (const auto& sp : d.params)
      std::cout << "    " << sp.name << " (default " << fmt(sp.default_value) << "): " << sp.doc << "\n";
    if (d.make_model) std::cout << "    [supports `study` on parameter " << d.study_param << "]\n";
  }
  return 0;
}

void render_scenario_csv(std::ostream& os, const ScenarioReport& rep,
                         const std::map<std::string, std::string>& meta) {
  emit_meta_csv(os, meta);
  os << "entry,computed,target,delta,tol,status\n";
  for (const auto& e : rep.entries) {
    os << e.name << "," << fmt(e.computed) << "," << (e.target ? fmt(*e.target) : "") << ","
       << (e.target ? fmt(e.delta()) : "") << "," << (e.exploratory ? "" : fmt(e.tol)) << ","
       << (e.exploratory ? "exploratory" : (e.ok() ? "ok" : "FAIL")) << "\n";
  }
}

void render_scenario_json(std::ostream& os, const ScenarioReport& rep,
                          const std::map<std::string, std::string>& meta) {
  os << "{";
  emit_meta_json(os, meta);
  os << ",\"results\":[";
  bool first = true;
  for (const auto& e : rep.entries) {
    if (!first) os << ",";
    first = false;
    os << "{\"entry\":" << json_str(e.name) << ",\"computed\":" << json_num(e.computed);
    if (e.target) os << ",\"target\":" << json_num(*e.target) << ",\"delta\":" << json_num(e.delta())
                     << ",\"tol\":" << json_num(e.tol);
    os << ",\"status\":" << json_str(e.exploratory ? "exploratory" : (e.ok() ? "ok" : "FAIL"))
       << ",\"note\":" << json_str(e.provenance) << "}";
  }
  os << "]}\n";
}

void render_scenario_table(std::ostream& os, const ScenarioReport& rep,
                           const std::map<std::string, std::string>& meta) {
  os << "scenario " << rep.name << " (";
  bool first = true;
  for (const auto& [k, v] : meta) {
    if (k == "command" || k == "scenario" || k == "format") continue;
    if (!first) os << ", ";
    first = false;
    os << k << "=" << v;
  }
  os << ")\n";
  for (const auto& e : rep.entries) {
    os << "  " << e.name;
    for (std::size_t pad = e.name.size(); pad < 28; ++pad) os << ' ';
    os << fmt(e.computed);
    if (e.target)
      os << "  target " << fmt(*e.target) << "  delta " << fmt(e.delta()) << "  "
         << (e.ok() ? "ok" : "FAIL");
    else
      os << "  (exploratory)";
    os << "\n";
  }
  os << (rep.pass() ? "PASS" : "FAIL") << "\n";
}

int cmd_scenario(const ParsedArgs& args) {
  const ScenarioDef* def = find_scenario(args.scenario);
  if (!def) throw UsageError("unknown scenario '" + args.scenario + "'");
  const auto params = resolve_params(*def, args);
  const int nmax = static_cast<int>(args.settings.integer("nmax", def->default_nmax));
  const auto seed = static_cast<std::uint64_t>(args.settings.integer("seed", 12345));
  const std::string format = args.settings.str("format", "table");

  const ScenarioReport rep = def->run(params, nmax, seed);
  const auto meta = base_meta("scenario", *def, params, nmax, seed, format);

  OutputTarget out(args.out_path);
  if (format == "csv")
    render_scenario_csv(*out.os, rep, meta);
  else if (format == "json")
    render_scenario_json(*out.os, rep, meta);
  else if (format == "table")
    render_scenario_table(*out.os, rep, meta);
  else
    throw UsageError("unknown format " + format);
  return rep.pass() ? 0 : 1;
}

int cmd_study(const ParsedArgs& args) {
  const ScenarioDef* def = find_scenario(args.scenario);
  if (!def) throw UsageError("unknown scenario '" + args.scenario + "'");
  if (!def->make_model)
    throw UsageError("scenario " + def->name + " has no discrete outcome model for studies");
  const auto params = resolve_params(*def, args);
  const int nmax = static_cast<int>(args.settings.integer("nmax", def->default_nmax));
  const auto seed = static_cast<std::uint64_t>(args.settings.integer("seed", 12345));
  const std::string format = args.settings.str("format", "csv");
  const std::vector<long> mlist = parse_mlist(args.settings.str("mlist", "10,30,100,300,1000,3000"));
  const int r = static_cast<int>(args.settings.integer("r", 100));
  const int b = static_cast<int>(args.settings.integer("b", 0));
  const std::string estimator = args.settings.str("estimator", "bayes");
  const Prior prior{quantize(args.settings.num("prior_lo", 0.0)),
                    quantize(args.settings.num("prior_hi", std::numbers::pi))};
  if (estimator != "bayes" && estimator != "mle") throw UsageError("estimator must be bayes or mle");
  if (r < 2 || r > 200) throw UsageError("r must lie in [2, 200]");
  if (b != 0 && b < 100) throw UsageError("b must be 0 (off) or >= 100");

  const ParametricModel model = def->make_model(params);
  const double phi_true = params.at(def->study_param);
  const EstimatorKind kind = estimator == "bayes" ? EstimatorKind::Bayes : EstimatorKind::Mle;
  const McStudy study = mc_study(model, phi_true, mlist, r, seed, prior, kind);

  std::vector<double> bootstrap_vars;
  if (b > 0) {
    const Rng master(seed);
    for (std::size_t mi = 0; mi < mlist.size(); ++mi) {
      const OutcomeSample s =
          sample(model, RVec::Constant(1, phi_true), mlist[mi], master.stream(0xB0051).stream(mi).key());
      const Estimator est = [&](const OutcomeSample& smp) {
        return kind == EstimatorKind::Bayes ? bayes_estimate(smp, model, prior).estimate
                                            : mle_estimate(smp, model, prior);
      };
      bootstrap_vars.push_back(bootstrap_variance(s, est, b, master.stream(0xB0052).stream(mi).key()));
    }
  }

  auto meta = base_meta("study", *def, params, nmax, seed, format);
  meta["mlist"] = [&] {
    std::string s;
    for (std::size_t i = 0; i < mlist.size(); ++i) s += (i ? "," : "") + std::to_string(mlist[i]);
    return s;
  }();
  meta["r"] = std::to_string(r);
  meta["b"] = std::to_string(b);
  meta["estimator"] = estimator;
  meta["prior_lo"] = fmt(prior.lo);
  meta["prior_hi"] = fmt(prior.hi);

  OutputTarget out(args.out_path);
  if (format == "csv" || format == "table") {
    emit_meta_csv(*out.os, meta);
    *out.os << "# fisher_info=" << fmt(study.fisher_info)
            << (study.fi_divergent ? " (divergent working point)" : "") << "\n";
    *out.os << "M,mean_estimate,variance,crb,ratio,p_value";
    if (b > 0) *out.os << ",bootstrap_var";
    *out.os << "\n";
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
      const McRow& row = study.rows[i];
      *out.os << row.m << "," << fmt(row.mean_estimate) << "," << fmt(row.empirical_variance) << ","
              << fmt(row.crb) << "," << fmt(row.ratio) << "," << fmt(row.p_value);
      if (b > 0) *out.os << "," << fmt(bootstrap_vars[i]);
      *out.os << "\n";
    }
  } else if (format == "json") {
    *out.os << "{";
    emit_meta_json(*out.os, meta);
    *out.os << ",\"fisher_info\":" << json_num(study.fisher_info)
            << ",\"fi_divergent\":" << (study.fi_divergent ? "true" : "false") << ",\"results\":[";
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
      const McRow& row = study.rows[i];
      if (i) *out.os << ",";
      *out.os << "{\"M\":" << row.m << ",\"mean_estimate\":" << json_num(row.mean_estimate)
              << ",\"variance\":" << json_num(row.empirical_variance) << ",\"crb\":" << json_num(row.crb)
              << ",\"ratio\":" << json_num(row.ratio) << ",\"p_value\":" << json_num(row.p_value);
      if (b > 0) *out.os << ",\"bootstrap_var\":" << json_num(bootstrap_vars[i]);
      *out.os << "}";
    }
    *out.os << "]}\n";
  } else {
    throw UsageError("unknown format " + format);
  }

  if (!args.dump_posterior.empty()) {
    const Rng master(seed);
    const OutcomeSample s =
        sample(model, RVec::Constant(1, phi_true), mlist.front(), master.stream(0xF16).key());
    const BayesEstimate be = bayes_estimate(s, model, prior);
    std::ofstream pf(args.dump_posterior, std::ios::binary);
    if (!pf) throw UsageError("cannot open " + args.dump_posterior);
    emit_meta_csv(pf, meta);
    pf << "# posterior_for_m=" << mlist.front() << "\n";
    pf << "phi,density\n";
    for (Eigen::Index g = 0; g < be.posterior.phi.size(); ++g)
      pf << fmt(be.posterior.phi[g]) << "," << fmt(std::exp(be.posterior.log_posterior[g])) << "\n";
  }
  return 0;
}

int cmd_sweep(const ParsedArgs& args) {
  const ScenarioDef* def = find_scenario(args.scenario);
  if (!def) throw UsageError("unknown scenario '" + args.scenario + "'");
  const auto params = resolve_params(*def, args);
  const int nmax = static_cast<int>(args.settings.integer("nmax", def->default_nmax));
  const auto seed = static_cast<std::uint64_t>(args.settings.integer("seed", 12345));
  const std::string format = args.settings.str("format", "csv");

  const std::string sweep_param = args.settings.str("sweep_param", "");
  if (sweep_param.empty()) throw UsageError("sweep needs --param");
  if (!params.count(sweep_param)) throw UsageError("unknown sweep parameter " + sweep_param);
  if (!args.settings.provided("sweep_from") || !args.settings.provided("sweep_to"))
    throw UsageError("sweep needs --from and --to");
  const double from = quantize(args.settings.num("sweep_from", 0.0));
  const double to = quantize(args.settings.num("sweep_to", 0.0));
  const int steps = static_cast<int>(args.settings.integer("sweep_steps", 0));
  if (steps < 2) throw UsageError("sweep needs --steps >= 2");
  if (!(to > from)) throw UsageError("sweep range is degenerate");

  std::vector<ScenarioReport> reports;
  for (int i = 0; i < steps; ++i) {
    auto p = params;
    p[sweep_param] = from + (to - from) * i / (steps - 1);
    reports.push_back(def->run(p, nmax, seed));
  }

  auto meta = base_meta("sweep", *def, params, nmax, seed, format);
  meta["sweep_param"] = sweep_param;
  meta["sweep_from"] = fmt(from);
  meta["sweep_to"] = fmt(to);
  meta["sweep_steps"] = std::to_string(steps);

  OutputTarget out(args.out_path);
  const auto& names = reports.front().entries;
  if (format == "csv" || format == "table") {
    emit_meta_csv(*out.os, meta);
    *out.os << sweep_param;
    for (const auto& e : names) *out.os << "," << e.name;
    *out.os << "\n";
    for (int i = 0; i < steps; ++i) {
      *out.os << fmt(from + (to - from) * i / (steps - 1));
      for (const auto& e : names) {
        const ScenarioEntry* found = reports[i].find(e.name);
        *out.os << "," << (found ? fmt(found->computed) : "");
      }
      *out.os << "\n";
    }
  } else if (format == "json") {
    *out.os << "{";
    emit_meta_json(*out.os, meta);
    *out.os << ",\"results\":[";
    for (int i = 0; i < steps; ++i) {
      if (i) *out.os << ",";
      *out.os << "{" << json_str(sweep_param) << ":" << json_num(from + (to - from) * i / (steps - 1));
      for (const auto& e : names) {
        const ScenarioEntry* found = reports[i].find(e.name);
        if (found) *out.os << "," << json_str(e.name) << ":" << json_num(found->computed);
      }
      *out.os << "}";
    }
    *out.os << "]}\n";
  } else {
    throw UsageError("unknown format " + format);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
      std::cout << kUsage;
      return args.empty() ? 2 : 0;
    }
    const std::string& command = args[0];
    if (command == "list") return cmd_list();
    ParsedArgs parsed = parse_args(args);
    if (parsed.scenario.empty()) throw UsageError("missing scenario name");
    if (command == "scenario") return cmd_scenario(parsed);
    if (command == "study") return cmd_study(parsed);
    if (command == "sweep") return cmd_sweep(parsed);
    throw UsageError("unknown command '" + command + "'");
  } catch (const UsageError& e) {
    if (std::string(e.what()) != "help") std::cerr << "error: " << e.what() << "\n";
    std::cerr << kUsage;
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace qmetro::cli
