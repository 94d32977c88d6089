#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "xxz/correlators.hpp"
#include "xxz/errors.hpp"
#include "xxz/model.hpp"
#include "xxz/thermo.hpp"
#include "xxz/verify.hpp"

namespace {

enum Exit { kOk = 0, kVerifyFail = 1, kConfig = 2, kNumeric = 3 };

struct RunConfig {
  std::string command;
  double delta = 0.0;
  double h = 0.0;
  int m = 1;
  int grid = 256;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 7;
  std::string suite = "all";
  std::string kind = "zz";
  int distance = 1;
};

std::string num(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

/// A numeric table rendered either as CSV or as JSON with the same digits.
struct Table {
  std::string command;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? ", " : "") << columns[c];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? ", " : "") << num(row[c]);
      os << "\n";
    }
    return os.str();
  }

  std::string json() const {
    std::ostringstream os;
    os << "{\n  \"command\": " << json_string(command) << ",\n";
    for (const auto& [k, v] : meta) os << "  " << json_string(k) << ": " << v << ",\n";
    os << "  \"columns\": [";
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? ", " : "") << json_string(columns[c]);
    os << "],\n  \"rows\": [";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      os << (r ? ",\n    [" : "\n    [");
      for (std::size_t c = 0; c < rows[r].size(); ++c) os << (c ? ", " : "") << num(rows[r][c]);
      os << "]";
    }
    os << (rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
    return os.str();
  }
};

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw xxz::ConfigError("cannot open output file '" + cfg.out + "'");
  f << text;
}

/// Validates the anisotropy and maps a massive field below h_c to zero.
xxz::Regime prepare(RunConfig& cfg) {
  const auto r = xxz::Regime::from_delta(cfg.delta);
  if (!(cfg.h >= 0)) throw xxz::ConfigError("magnetic field must be non-negative");
  if (cfg.m < 1) throw xxz::ConfigError("--m must be at least 1");
  if (cfg.m > xxz::kDefaultDimensionCap) {
    throw xxz::ConfigError("--m exceeds the integral dimension cap " + std::to_string(xxz::kDefaultDimensionCap));
  }
  if (cfg.grid < 16) throw xxz::ConfigError("--grid must be at least 16");
  if (r.massive() && cfg.h > 0) {
    const double hc = xxz::critical_field(r.zeta());
    if (cfg.h <= hc) {
      std::cerr << "notice: h = " << num(cfg.h) << " does not exceed h_c = " << num(hc)
                << " in the massive regime; using h = 0\n";
      cfg.h = 0.0;
    }
  }
  return r;
}

xxz::CorrelatorOptions options(const RunConfig& cfg) {
  xxz::CorrelatorOptions opt;
  opt.lieb.n_grid = cfg.grid;
  return opt;
}

Table base_table(const RunConfig& cfg) {
  Table t;
  t.command = cfg.command;
  t.meta = {{"delta", num(cfg.delta)}, {"h", num(cfg.h)}};
  return t;
}

int cmd_efp(RunConfig cfg) {
  const auto r = prepare(cfg);
  const auto opt = options(cfg);
  Table t = base_table(cfg);
  t.columns = {"m", "tau", "err"};
  bool converged = true;
  for (int k = 1; k <= cfg.m; ++k) {
    const auto res = xxz::efp(r, cfg.h, k, opt);
    converged = converged && res.converged;
    t.rows.push_back({static_cast<double>(k), res.value.real(), res.error});
  }
  emit(cfg, cfg.format == "json" ? t.json() : t.csv());
  if (!converged) {
    std::cerr << "error: quadrature error estimate exceeds the tolerance\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_corr(RunConfig cfg) {
  const auto r = prepare(cfg);
  if (cfg.distance < 1 || cfg.distance + 1 > xxz::kDefaultDimensionCap) {
    throw xxz::ConfigError("--distance must lie in 1.." + std::to_string(xxz::kDefaultDimensionCap - 1));
  }
  xxz::SpinKind kind;
  if (cfg.kind == "zz") {
    kind = xxz::SpinKind::ZZ;
  } else if (cfg.kind == "pm") {
    kind = xxz::SpinKind::PM;
  } else {
    throw xxz::ConfigError("--kind must be zz or pm");
  }
  const auto opt = options(cfg);
  Table t = base_table(cfg);
  t.meta.emplace_back("kind", json_string(cfg.kind));
  t.columns = {"m", "value", "err"};
  bool converged = true;
  for (int d = 1; d <= cfg.distance; ++d) {
    const auto res = xxz::spin_correlator(r, cfg.h, kind, d, opt);
    converged = converged && res.converged;
    t.rows.push_back({static_cast<double>(d), res.value, res.error});
  }
  emit(cfg, cfg.format == "json" ? t.json() : t.csv());
  if (!converged) {
    std::cerr << "error: quadrature error estimate exceeds the tolerance\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_density(RunConfig cfg) {
  const auto r = prepare(cfg);
  xxz::LiebOptions lo;
  lo.n_grid = cfg.grid;
  const auto prof = xxz::solve_lieb(r, cfg.h, lo);
  Table t = base_table(cfg);
  t.meta.emplace_back("lambda_F", num(prof.lambda_F));
  t.columns = {"alpha", "rho"};
  for (std::size_t i = 0; i < prof.size(); ++i) t.rows.push_back({prof.x[i], prof.rho[i]});
  emit(cfg, cfg.format == "json" ? t.json() : t.csv());
  return kOk;
}

int cmd_verify(const RunConfig& cfg) {
  const auto rep = xxz::verify_suite(cfg.suite, cfg.seed);
  const std::string verdict = std::string(rep.ok() ? "PASS " : "FAIL ") + std::to_string(rep.passed()) + "/" +
                              std::to_string(rep.checks.size());
  std::ostringstream os;
  if (cfg.format == "json") {
    os << "{\n  \"command\": \"verify\",\n  \"suite\": " << json_string(cfg.suite) << ",\n  \"seed\": " << cfg.seed
       << ",\n  \"checks\": [";
    for (std::size_t i = 0; i < rep.checks.size(); ++i) {
      const auto& c = rep.checks[i];
      os << (i ? ",\n" : "\n") << "    {\"name\": " << json_string(c.name) << ", \"deviation\": " << num(c.deviation)
         << ", \"tolerance\": " << num(c.tolerance) << ", \"pass\": " << (c.pass ? "true" : "false")
         << ", \"note\": " << json_string(c.note) << "}";
    }
    os << "\n  ],\n  \"passed\": " << rep.passed() << ",\n  \"total\": " << rep.checks.size()
       << ",\n  \"verdict\": " << json_string(verdict) << "\n}\n";
  } else {
    for (const auto& c : rep.checks) {
      os << (c.pass ? "ok    " : "FAIL  ") << c.name << ": " << num(c.deviation) << " < " << num(c.tolerance);
      if (!c.note.empty()) os << " (" << c.note << ")";
      os << "\n";
    }
    os << verdict << "\n";
  }
  emit(cfg, os.str());
  return rep.ok() ? kOk : kVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation functions of the XXZ chain from multiple-integral representations"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_config("--config", "", "key=value configuration file (flags take precedence)");
  app.require_subcommand(1, 1);

  RunConfig cfg;
  app.add_option("--delta", cfg.delta, "anisotropy Delta > -1")->capture_default_str();
  app.add_option("--h", cfg.h, "magnetic field h >= 0")->capture_default_str();
  app.add_option("--m", cfg.m, "largest block length")->capture_default_str();
  app.add_option("--grid", cfg.grid, "Nystrom nodes of the density solver")->capture_default_str();
  app.add_option("--out", cfg.out, "output file (default: stdout)");
  app.add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed of the randomised checks")->capture_default_str();
  app.add_option("--suite", cfg.suite, "verification suite")
      ->check(CLI::IsMember({"all", "finite", "determinants", "thermo"}))
      ->capture_default_str();
  app.add_option("--kind", cfg.kind, "spin correlator")->check(CLI::IsMember({"zz", "pm"}))->capture_default_str();
  app.add_option("--distance", cfg.distance, "largest site separation")->capture_default_str();

  auto* efp = app.add_subcommand("efp", "emptiness formation probability tau(1..m)")->fallthrough();
  auto* corr = app.add_subcommand("corr", "spin correlators at distance 1..d")->fallthrough();
  auto* density = app.add_subcommand("density", "ground-state root density on the solver grid")->fallthrough();
  auto* verify = app.add_subcommand("verify", "run the invariant batteries")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (efp->parsed()) {
      cfg.command = "efp";
      return cmd_efp(cfg);
    }
    if (corr->parsed()) {
      cfg.command = "corr";
      return cmd_corr(cfg);
    }
    if (density->parsed()) {
      cfg.command = "density";
      return cmd_density(cfg);
    }
    if (verify->parsed()) {
      cfg.command = "verify";
      return cmd_verify(cfg);
    }
  } catch (const xxz::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const xxz::DimensionCap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const xxz::SizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kConfig;
}
