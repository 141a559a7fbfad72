#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "glfa/diagnostics.hpp"
#include "glfa/errors.hpp"

namespace glfa {

using nlohmann::json;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline double parse_double_field(const std::string& field, const std::string& path, int lineno) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw parse_error(path + ":" + std::to_string(lineno) + ": cannot parse '" + field +
                      "' as a number");
  return v;
}

inline long parse_int_field(const std::string& field, const std::string& path, int lineno) {
  long v = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw parse_error(path + ":" + std::to_string(lineno) + ": cannot parse '" + field +
                      "' as an integer");
  return v;
}

// shortest representation that round-trips
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw parse_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw parse_error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// dense CSV: one matrix row per line; an empty cell or the literal NA marks a
// missing value
// ---------------------------------------------------------------------------

inline ObservationSet read_dense_csv(const std::string& path, bool header = false) {
  const auto lines = detail::read_lines(path);
  std::size_t first = header ? 1 : 0;
  if (lines.size() <= first) throw parse_error(path + ": no data rows");

  std::vector<Triplet> cells;
  int J = -1;
  int N = 0;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const auto fields = detail::split_csv_line(lines[li]);
    if (J < 0) {
      J = static_cast<int>(fields.size());
    } else if (static_cast<int>(fields.size()) != J) {
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(J) +
                        " fields, got " + std::to_string(fields.size()));
    }
    for (int j = 0; j < J; ++j) {
      const auto& f = fields[j];
      if (f.empty() || f == "NA") continue;
      cells.push_back({N, j, detail::parse_double_field(f, path, lineno)});
    }
    ++N;
  }
  return ObservationSet::from_triplets(N, J, std::move(cells));
}

inline void write_dense_csv(const std::string& path, const ObservationSet& obs) {
  std::ostringstream out;
  const int N = obs.rows(), J = obs.cols();
  std::vector<std::string> row(J);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < J; ++j) row[j] = "NA";
    const auto cells = obs.row(i);
    for (std::size_t t = 0; t < cells.size(); ++t)
      row[cells.idx[t]] = detail::format_double(cells.y[t]);
    for (int j = 0; j < J; ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

// dense matrix without missing values (diagnostic inputs)
inline Eigen::MatrixXd read_matrix_csv(const std::string& path, bool header = false) {
  const auto lines = detail::read_lines(path);
  std::size_t first = header ? 1 : 0;
  if (lines.size() <= first) throw parse_error(path + ": no data rows");
  std::vector<std::vector<double>> rows;
  int J = -1;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    const auto fields = detail::split_csv_line(lines[li]);
    if (J < 0) {
      J = static_cast<int>(fields.size());
    } else if (static_cast<int>(fields.size()) != J) {
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(J) +
                        " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(J);
    for (int j = 0; j < J; ++j) row[j] = detail::parse_double_field(fields[j], path, lineno);
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd M(rows.size(), J);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < J; ++j) M(static_cast<int>(i), j) = rows[i][j];
  return M;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M) {
  std::ostringstream out;
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(M(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// triplet CSV: columns i,j,y with 0-based indices; N and J are declared by
// the caller
// ---------------------------------------------------------------------------

inline ObservationSet read_triplets_csv(const std::string& path, int N, int J,
                                        bool header = false) {
  if (N < 1 || J < 1) throw std::invalid_argument("read_triplets_csv: N and J must be declared positive");
  const auto lines = detail::read_lines(path);
  std::vector<Triplet> cells;
  std::unordered_set<long long> seen;
  for (std::size_t li = header ? 1 : 0; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    if (lines[li].empty()) continue;
    const auto fields = detail::split_csv_line(lines[li]);
    if (fields.size() != 3)
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected 3 fields i,j,y, got " +
                        std::to_string(fields.size()));
    const long i = detail::parse_int_field(fields[0], path, lineno);
    const long j = detail::parse_int_field(fields[1], path, lineno);
    if (i < 0 || i >= N || j < 0 || j >= J)
      throw parse_error(path + ":" + std::to_string(lineno) + ": cell (" + std::to_string(i) +
                        "," + std::to_string(j) + ") out of range for " + std::to_string(N) + "x" +
                        std::to_string(J));
    const long long key = static_cast<long long>(i) * J + j;
    if (!seen.insert(key).second)
      throw parse_error(path + ":" + std::to_string(lineno) + ": duplicate cell (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
    cells.push_back({static_cast<int>(i), static_cast<int>(j),
                     detail::parse_double_field(fields[2], path, lineno)});
  }
  return ObservationSet::from_triplets(N, J, std::move(cells));
}

inline void write_triplets_csv(const std::string& path, const ObservationSet& obs) {
  std::ostringstream out;
  out << "i,j,y\n";
  for (const auto& c : obs.to_triplets())
    out << c.i << ',' << c.j << ',' << detail::format_double(c.y) << '\n';
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// fit configs and simulation settings as JSON
// ---------------------------------------------------------------------------

inline json to_json(const FitConfig& c) {
  return json{{"max_sweeps", c.max_sweeps},
              {"rel_tol", c.rel_tol},
              {"inner_max_iter", c.inner_max_iter},
              {"inner_tol", c.inner_tol},
              {"seed", c.seed}};
}

inline FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.max_sweeps = j.value("max_sweeps", c.max_sweeps);
  c.rel_tol = j.value("rel_tol", c.rel_tol);
  c.inner_max_iter = j.value("inner_max_iter", c.inner_max_iter);
  c.inner_tol = j.value("inner_tol", c.inner_tol);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline json to_json(const SimSetting& s) {
  return json{{"family", s.family.name()},
              {"N", s.N},
              {"J", s.J},
              {"K_star", s.K_star},
              {"missing", missing_scheme_name(s.scheme)},
              {"p", s.p},
              {"replications", s.replications},
              {"candidates", s.candidates},
              {"seed", s.seed},
              {"C", s.C},
              {"phi", s.phi},
              {"threads", s.threads},
              {"fit", to_json(s.fit)}};
}

inline SimSetting sim_setting_from_json(const json& j) {
  SimSetting s;
  if (j.contains("family")) s.family = Family::parse(j.at("family").get<std::string>());
  s.N = j.value("N", s.N);
  s.J = j.value("J", s.J);
  s.K_star = j.value("K_star", s.K_star);
  if (j.contains("missing")) s.scheme = parse_missing_scheme(j.at("missing").get<std::string>());
  s.p = j.value("p", s.p);
  s.replications = j.value("replications", s.replications);
  if (j.contains("candidates")) s.candidates = j.at("candidates").get<std::vector<int>>();
  s.seed = j.value("seed", s.seed);
  s.C = j.value("C", s.C);
  s.phi = j.value("phi", s.phi);
  s.threads = j.value("threads", s.threads);
  if (j.contains("fit")) s.fit = fit_config_from_json(j.at("fit"));
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

inline json selection_report_json(const SelectionResult& r, const Family& fam, double C,
                                  std::uint64_t seed) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back(json{{"K", row.K},
                        {"deviance", row.deviance},
                        {"penalty", row.penalty},
                        {"jic", row.jic},
                        {"sweeps", row.sweeps_used},
                        {"converged", row.converged},
                        {"ok", row.ok},
                        {"error", row.error}});
  }
  return json{{"report", "selection"},
              {"family", fam.name()},
              {"N", r.N},
              {"J", r.J},
              {"n", r.n},
              {"C", C},
              {"seed", seed},
              {"phi_used", r.phi_used},
              {"penalty_reliable", penalty_reliable(r.n, r.N, r.J)},
              {"chosen_K", r.chosen_K},
              {"rows", rows}};
}

inline std::string selection_report_csv(const SelectionResult& r) {
  std::ostringstream out;
  out << "K,deviance,penalty,jic,chosen\n";
  for (const auto& row : r.rows) {
    out << row.K << ',' << detail::format_double(row.deviance) << ','
        << detail::format_double(row.penalty) << ',' << detail::format_double(row.jic) << ','
        << (row.ok && row.K == r.chosen_K ? 1 : 0) << '\n';
  }
  return out.str();
}

// Structural check of a selection report produced by selection_report_json;
// returns a list of problems, empty when valid.
inline std::vector<std::string> validate_selection_report(const json& j) {
  std::vector<std::string> errs;
  auto need = [&](const char* key, bool ok) {
    if (!ok) errs.push_back(std::string("field '") + key + "' missing or mistyped");
  };
  need("report", j.contains("report") && j["report"] == "selection");
  need("family", j.contains("family") && j["family"].is_string());
  need("N", j.contains("N") && j["N"].is_number_integer());
  need("J", j.contains("J") && j["J"].is_number_integer());
  need("n", j.contains("n") && j["n"].is_number_integer());
  need("C", j.contains("C") && j["C"].is_number());
  need("phi_used", j.contains("phi_used") && j["phi_used"].is_number());
  need("penalty_reliable", j.contains("penalty_reliable") && j["penalty_reliable"].is_boolean());
  need("chosen_K", j.contains("chosen_K") && j["chosen_K"].is_number_integer());
  need("rows", j.contains("rows") && j["rows"].is_array() && !j["rows"].empty());
  if (!errs.empty()) return errs;
  for (const auto& row : j["rows"]) {
    if (!(row.contains("K") && row["K"].is_number_integer()) ||
        !(row.contains("penalty") && row["penalty"].is_number()) ||
        !row.contains("deviance") || !row.contains("jic") ||
        !(row.contains("ok") && row["ok"].is_boolean())) {
      errs.push_back("row missing K/deviance/penalty/jic/ok");
      continue;
    }
    if (row["ok"].get<bool>()) {
      if (!row["deviance"].is_number() || !row["jic"].is_number()) {
        errs.push_back("successful row must carry numeric deviance and jic");
      } else {
        const double dev = row["deviance"].get<double>();
        const double pen = row["penalty"].get<double>();
        const double ic = row["jic"].get<double>();
        if (std::abs(ic - (dev + pen)) > 1e-6 * std::max(1.0, std::abs(ic)))
          errs.push_back("jic != deviance + penalty for K=" + row["K"].dump());
      }
    }
  }
  return errs;
}

inline json fit_report_json(const FitResult& fit, const Family& fam, const ObservationSet& obs,
                            double C, std::uint64_t seed, bool include_trace = false) {
  json out{{"report", "fit"},
           {"family", fam.name()},
           {"N", obs.rows()},
           {"J", obs.cols()},
           {"n", obs.n()},
           {"K", fit.K},
           {"C", C},
           {"seed", seed},
           {"phi", fit.params.phi},
           {"loglik", fit.loglik},
           {"deviance", -2.0 * fit.loglik},
           {"sweeps_used", fit.sweeps_used},
           {"converged", fit.converged}};
  if (include_trace) out["trace"] = fit.loglik_trace;
  return out;
}

inline std::string fit_report_csv(const FitResult& fit) {
  std::ostringstream out;
  out << "K,loglik,deviance,sweeps_used,converged\n";
  out << fit.K << ',' << detail::format_double(fit.loglik) << ','
      << detail::format_double(-2.0 * fit.loglik) << ',' << fit.sweeps_used << ','
      << (fit.converged ? 1 : 0) << '\n';
  return out.str();
}

inline json study_report_json(const StudySummary& sum, const SimSetting& setting,
                              bool include_runtimes = true) {
  json reps = json::array();
  for (const auto& r : sum.reps) {
    json row{{"rep", r.rep},
             {"chosen_K", r.chosen_K},
             {"ok", r.ok},
             {"outcome", !r.ok                        ? "failed"
                         : r.chosen_K == setting.K_star ? "correct"
                         : r.chosen_K < setting.K_star  ? "under"
                                                        : "over"},
             {"error", r.error}};
    if (include_runtimes) row["runtime_seconds"] = r.runtime_seconds;
    reps.push_back(std::move(row));
  }
  return json{{"report", "study"},
              {"setting", to_json(setting)},
              {"replications", sum.replications},
              {"correct", sum.correct},
              {"under", sum.under},
              {"over", sum.over},
              {"failures", sum.failures},
              {"reps", reps}};
}

inline std::string study_report_csv(const StudySummary& sum, const SimSetting& setting,
                                    bool include_runtimes = true) {
  std::ostringstream out;
  out << "rep,chosen_K,outcome" << (include_runtimes ? ",runtime_seconds" : "") << '\n';
  for (const auto& r : sum.reps) {
    const char* outcome = !r.ok                          ? "failed"
                          : r.chosen_K == setting.K_star ? "correct"
                          : r.chosen_K < setting.K_star  ? "under"
                                                         : "over";
    out << r.rep << ',' << r.chosen_K << ',' << outcome;
    if (include_runtimes) out << ',' << detail::format_double(r.runtime_seconds);
    out << '\n';
  }
  return out.str();
}

inline json hadamard_report_json(const HadamardAudit& a, int N, int J, int r, int r_star, double C,
                                 std::uint64_t seed) {
  return json{{"report", "hadamard_audit"}, {"N", N},       {"J", J},
              {"r", r},                     {"r_star", r_star}, {"C", C},
              {"seed", seed},               {"trials", a.trials},
              {"violations", a.violations}, {"max_ratio", a.max_ratio}};
}

inline json scaling_report_json(const std::vector<ScalingRow>& rows, const Family& fam, int K_star,
                                double p, std::uint64_t seed) {
  json out{{"report", "scaling_study"},
           {"family", fam.name()},
           {"K_star", K_star},
           {"p", p},
           {"seed", seed}};
  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back(json{{"N", r.N},
                         {"J", r.J},
                         {"n_star", r.n_star},
                         {"reps", r.reps},
                         {"mean_scaled_error", r.mean_scaled_error},
                         {"rate_bound", r.rate_bound_value},
                         {"errors", r.errors}});
  }
  out["rows"] = jrows;
  return out;
}

inline std::string scaling_report_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream out;
  out << "N,J,n_star,reps,mean_scaled_error,rate_bound\n";
  for (const auto& r : rows) {
    out << r.N << ',' << r.J << ',' << detail::format_double(r.n_star) << ',' << r.reps << ','
        << detail::format_double(r.mean_scaled_error) << ','
        << detail::format_double(r.rate_bound_value) << '\n';
  }
  return out.str();
}

inline std::string spectrum_csv(const Eigen::VectorXd& sv) {
  std::ostringstream out;
  out << "index,singular_value\n";
  for (int k = 0; k < sv.size(); ++k)
    out << k << ',' << detail::format_double(sv(k)) << '\n';
  return out.str();
}

}  // namespace glfa
