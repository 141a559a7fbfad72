// Command-line front end: fit / select / simulate / diagnose.
//
// Data flows to --output (or stdout); diagnostics go to stderr. Exit codes:
// 0 success, 1 input error, 2 numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "glfa/glfa.hpp"

namespace {

using glfa::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
  return buf;
}

struct CommonOpts {
  std::string config;
  std::string family = "logistic";
  double C = 4.0;
  double rel_tol = 1e-4;
  int max_sweeps = 500;
  int inner_max_iter = 50;
  double inner_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string input;
  std::string triplets;
  int N = 0;
  int J = 0;
  bool header = false;
  std::string output;
  std::string format = "json";
  bool no_timestamp = false;

  CLI::Option* o_family = nullptr;
  CLI::Option* o_C = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_max_sweeps = nullptr;
  CLI::Option* o_inner_iter = nullptr;
  CLI::Option* o_inner_tol = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_input = nullptr;
  CLI::Option* o_triplets = nullptr;
  CLI::Option* o_N = nullptr;
  CLI::Option* o_J = nullptr;
  CLI::Option* o_header = nullptr;
  CLI::Option* o_output = nullptr;
  CLI::Option* o_format = nullptr;
  CLI::Option* o_no_timestamp = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file mirroring the CLI flags");
    o_family = cmd->add_option("--family", family, "logistic|poisson|gaussian");
    o_C = cmd->add_option("--C", C, "constraint radius");
    o_tol = cmd->add_option("--tol", rel_tol, "relative log-likelihood improvement stop");
    o_max_sweeps = cmd->add_option("--max-sweeps", max_sweeps, "maximum alternating sweeps");
    o_inner_iter = cmd->add_option("--inner-iter", inner_max_iter, "inner ascent iterations per block");
    o_inner_tol = cmd->add_option("--inner-tol", inner_tol, "projected-gradient norm stop");
    o_seed = cmd->add_option("--seed", seed, "RNG seed");
    o_input = cmd->add_option("--input", input, "dense CSV (empty cell or NA = missing)");
    o_triplets = cmd->add_option("--triplets", triplets, "triplet CSV with columns i,j,y (0-based)");
    o_N = cmd->add_option("--N", N, "row count (triplet mode)");
    o_J = cmd->add_option("--J", J, "column count (triplet mode)");
    o_header = cmd->add_flag("--header", header, "input CSV carries a header line");
    o_output = cmd->add_option("--output", output, "output path (default stdout)");
    o_format = cmd->add_option("--format", format, "json|csv")
                   ->check(CLI::IsMember({"json", "csv"}));
    o_no_timestamp = cmd->add_flag("--no-timestamp", no_timestamp,
                                   "omit timestamps and runtimes for byte-identical reports");
  }

  // config file fills anything the command line left untouched
  void merge_config(const std::string& command) {
    if (config.empty()) return;
    std::ifstream in(config);
    if (!in) throw glfa::parse_error(config + ": cannot open config file");
    json cfg = json::parse(in, nullptr, true, true);
    if (cfg.contains("command") && cfg.at("command").get<std::string>() != command)
      throw std::invalid_argument("config file names command '" +
                                  cfg.at("command").get<std::string>() + "' but '" + command +
                                  "' was invoked");
    auto take = [&cfg](CLI::Option* opt, const char* key, auto& value) {
      if (opt && opt->count() == 0 && cfg.contains(key))
        value = cfg.at(key).get<std::decay_t<decltype(value)>>();
    };
    take(o_family, "family", family);
    take(o_C, "C", C);
    take(o_tol, "tol", rel_tol);
    take(o_max_sweeps, "max_sweeps", max_sweeps);
    take(o_inner_iter, "inner_max_iter", inner_max_iter);
    take(o_inner_tol, "inner_tol", inner_tol);
    take(o_seed, "seed", seed);
    take(o_input, "input", input);
    take(o_triplets, "triplets", triplets);
    take(o_N, "N", N);
    take(o_J, "J", J);
    take(o_header, "header", header);
    take(o_output, "output", output);
    take(o_format, "format", format);
    take(o_no_timestamp, "no_timestamp", no_timestamp);
  }

  glfa::FitConfig fit_config() const {
    glfa::FitConfig cfg;
    cfg.max_sweeps = max_sweeps;
    cfg.rel_tol = rel_tol;
    cfg.inner_max_iter = inner_max_iter;
    cfg.inner_tol = inner_tol;
    cfg.seed = seed;
    return cfg;
  }

  glfa::ObservationSet load_data() const {
    const bool dense = !input.empty(), trip = !triplets.empty();
    if (dense == trip)
      throw std::invalid_argument("provide exactly one of --input (dense) or --triplets");
    if (dense) return glfa::read_dense_csv(input, header);
    if (N < 1 || J < 1)
      throw std::invalid_argument("triplet mode requires --N and --J to be declared positive");
    return glfa::read_triplets_csv(triplets, N, J, header);
  }

  void emit(const std::string& payload) const {
    if (output.empty()) {
      std::cout << payload;
    } else {
      glfa::write_text_file(output, payload);
      std::cerr << "wrote " << output << "\n";
    }
  }

  void emit_json(json j) const {
    if (!no_timestamp) j["generated_at"] = utc_timestamp();
    emit(j.dump(2) + "\n");
  }
};

int run_fit(const CommonOpts& o, int K) {
  const glfa::Family fam = glfa::Family::parse(o.family);
  const glfa::ObservationSet obs = o.load_data();
  const glfa::FitResult fit = glfa::fit_jml(obs, K, fam, o.C, o.fit_config());
  std::cerr << "fit: K=" << K << " loglik=" << fit.loglik << " sweeps=" << fit.sweeps_used
            << (fit.converged ? "" : " (max sweeps reached)") << "\n";
  if (o.format == "csv")
    o.emit(glfa::fit_report_csv(fit));
  else
    o.emit_json(glfa::fit_report_json(fit, fam, obs, o.C, o.seed));
  return 0;
}

int run_select(const CommonOpts& o, const std::vector<int>& candidates) {
  const glfa::Family fam = glfa::Family::parse(o.family);
  const glfa::ObservationSet obs = o.load_data();
  if (!glfa::penalty_reliable(obs.n(), obs.rows(), obs.cols()))
    std::cerr << "warning: observed count n <= max(N,J); the penalty is nonpositive and the "
                 "criterion is unreliable\n";
  const glfa::SelectionResult sel = glfa::select_K(obs, candidates, fam, o.C, o.fit_config());
  if (sel.phi_used <= 1e-12)
    std::cerr << "warning: dispersion estimate degenerate (residuals ~ 0); floored at 1e-12\n";
  for (const auto& row : sel.rows) {
    if (!row.ok) std::cerr << "warning: fit failed for K=" << row.K << ": " << row.error << "\n";
  }
  std::cerr << "chosen K = " << sel.chosen_K << "\n";
  if (o.format == "csv")
    o.emit(glfa::selection_report_csv(sel));
  else
    o.emit_json(glfa::selection_report_json(sel, fam, o.C, o.seed));
  return 0;
}

int run_simulate(const CommonOpts& o, const std::string& study_path, glfa::SimSetting s,
                 bool inline_setting) {
  if (!study_path.empty()) {
    if (inline_setting)
      std::cerr << "note: --study given; inline setting flags are ignored\n";
    std::ifstream in(study_path);
    if (!in) throw glfa::parse_error(study_path + ": cannot open study file");
    s = glfa::sim_setting_from_json(json::parse(in, nullptr, true, true));
  }
  s.validate();
  const glfa::StudySummary sum = glfa::run_study(s);
  std::cerr << "study: correct=" << sum.correct << " under=" << sum.under << " over=" << sum.over
            << " failures=" << sum.failures << "\n";
  if (o.format == "csv")
    o.emit(glfa::study_report_csv(sum, s, !o.no_timestamp));
  else
    o.emit_json(glfa::study_report_json(sum, s, !o.no_timestamp));
  return 0;
}

struct DiagnoseOpts {
  std::string spectrum;
  int trials = 0;
  int N = 20, J = 20, r = 3, r_star = 3;
  std::string sizes;
  int K_star = 3;
  double p = 1.0;
  int reps = 10;
  double phi = 1.0;
};

std::vector<std::pair<int, int>> parse_sizes(const std::string& spec) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto x = tok.find('x');
    if (x == std::string::npos)
      throw std::invalid_argument("--sizes expects a comma list like 400x40,800x80");
    out.emplace_back(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
  }
  if (out.empty()) throw std::invalid_argument("--sizes parsed to an empty list");
  return out;
}

int run_diagnose(const CommonOpts& o, const DiagnoseOpts& d) {
  const int modes = (!d.spectrum.empty()) + (d.trials > 0) + (!d.sizes.empty());
  if (modes != 1)
    throw std::invalid_argument("pick exactly one of --spectrum, --hadamard-trials, --sizes");

  if (!d.spectrum.empty()) {
    const Eigen::MatrixXd M = glfa::read_matrix_csv(d.spectrum, o.header);
    const Eigen::VectorXd sv = glfa::singular_values(M);
    if (o.format == "csv") {
      o.emit(glfa::spectrum_csv(sv));
    } else {
      json j{{"report", "spectrum"},
             {"N", M.rows()},
             {"J", M.cols()},
             {"values", std::vector<double>(sv.data(), sv.data() + sv.size())}};
      o.emit_json(std::move(j));
    }
    return 0;
  }

  if (d.trials > 0) {
    const auto audit = glfa::run_hadamard_audit(d.trials, d.N, d.J, d.r, d.r_star, o.C, o.seed);
    std::cerr << "hadamard audit: " << audit.violations << "/" << audit.trials
              << " violations, max lhs/rhs = " << audit.max_ratio << "\n";
    json j = glfa::hadamard_report_json(audit, d.N, d.J, d.r, d.r_star, o.C, o.seed);
    if (o.format == "csv") {
      std::ostringstream csv;
      csv << "trials,violations,max_ratio\n"
          << audit.trials << ',' << audit.violations << ',' << audit.max_ratio << '\n';
      o.emit(csv.str());
    } else {
      o.emit_json(std::move(j));
    }
    return 0;
  }

  const glfa::Family fam = glfa::Family::parse(o.family);
  const auto table = glfa::error_scaling_study(fam, d.K_star, parse_sizes(d.sizes), d.p, d.reps,
                                               d.phi, o.C, o.fit_config(), o.seed);
  for (const auto& row : table)
    std::cerr << "scaling: " << row.N << "x" << row.J << " mean error=" << row.mean_scaled_error
              << " rate bound=" << row.rate_bound_value << "\n";
  if (o.format == "csv")
    o.emit(glfa::scaling_report_csv(table));
  else
    o.emit_json(glfa::scaling_report_json(table, fam, d.K_star, d.p, o.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent factor models for binary, count, and continuous matrices: constrained "
               "joint maximum likelihood and information-criterion selection of the factor count"};
  app.require_subcommand(1);

  CommonOpts fit_opts, sel_opts, sim_opts, diag_opts;

  auto* fit_cmd = app.add_subcommand("fit", "fit a model with a fixed number of factors");
  int fit_K = 1;
  fit_opts.attach(fit_cmd);
  fit_cmd->add_option("--K", fit_K, "number of factors")->required();

  auto* sel_cmd = app.add_subcommand("select", "choose the number of factors by the criterion");
  std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
  sel_opts.attach(sel_cmd);
  auto* o_cand = sel_cmd->add_option("--candidates", candidates, "candidate factor counts");

  auto* sim_cmd = app.add_subcommand("simulate", "run a replication study on synthetic data");
  sim_opts.attach(sim_cmd);
  std::string study_path;
  glfa::SimSetting setting;
  std::string missing = "none";
  std::vector<int> sim_candidates{4, 5, 6};
  sim_cmd->add_option("--study", study_path, "JSON study definition");
  auto* o_simN = sim_cmd->add_option("--rows", setting.N, "generated row count");
  sim_cmd->add_option("--cols", setting.J, "generated column count");
  sim_cmd->add_option("--K-star", setting.K_star, "true number of factors");
  sim_cmd->add_option("--missing", missing, "none|uniform|nonuniform_factor1");
  sim_cmd->add_option("--p", setting.p, "observation probability for uniform missingness");
  sim_cmd->add_option("--reps", setting.replications, "replication count");
  sim_cmd->add_option("--study-candidates", sim_candidates, "candidate factor counts");
  sim_cmd->add_option("--threads", setting.threads, "parallel replication workers");
  sim_cmd->add_option("--phi", setting.phi, "Gaussian generation variance");

  auto* diag_cmd = app.add_subcommand("diagnose", "spectra, scaling studies, and matrix audits");
  DiagnoseOpts d;
  diag_opts.attach(diag_cmd);
  diag_cmd->add_option("--spectrum", d.spectrum, "dense matrix CSV; emit singular values");
  diag_cmd->add_option("--hadamard-trials", d.trials, "randomized nuclear-norm audit trials");
  diag_cmd->add_option("--rows", d.N, "audit matrix rows");
  diag_cmd->add_option("--cols", d.J, "audit matrix columns");
  diag_cmd->add_option("--r", d.r, "audit factor rank of the first matrix");
  diag_cmd->add_option("--r-star", d.r_star, "audit factor rank of the second matrix");
  diag_cmd->add_option("--sizes", d.sizes, "scaling study sizes, e.g. 400x40,800x80");
  diag_cmd->add_option("--K-star", d.K_star, "scaling study true factor count");
  diag_cmd->add_option("--p", d.p, "scaling study observation probability (1 = none missing)");
  diag_cmd->add_option("--reps", d.reps, "scaling study replications per size");
  diag_cmd->add_option("--phi", d.phi, "scaling study Gaussian variance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (fit_cmd->parsed()) {
      fit_opts.merge_config("fit");
      return run_fit(fit_opts, fit_K);
    }
    if (sel_cmd->parsed()) {
      sel_opts.merge_config("select");
      // config may carry the candidate list too
      if (o_cand->count() == 0 && !sel_opts.config.empty()) {
        std::ifstream in(sel_opts.config);
        json cfg = json::parse(in, nullptr, true, true);
        if (cfg.contains("candidates")) candidates = cfg.at("candidates").get<std::vector<int>>();
      }
      return run_select(sel_opts, candidates);
    }
    if (sim_cmd->parsed()) {
      sim_opts.merge_config("simulate");
      setting.family = glfa::Family::parse(sim_opts.family);
      setting.scheme = glfa::parse_missing_scheme(missing);
      setting.candidates = sim_candidates;
      setting.seed = sim_opts.seed;
      setting.C = sim_opts.C;
      setting.fit = sim_opts.fit_config();
      return run_simulate(sim_opts, study_path, setting, o_simN->count() > 0);
    }
    diag_opts.merge_config("diagnose");
    return run_diagnose(diag_opts, d);
  } catch (const glfa::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const glfa::parse_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
