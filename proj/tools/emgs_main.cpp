#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emgs/copula.hpp"
#include "emgs/dataset.hpp"
#include "emgs/ecm.hpp"
#include "emgs/evaluate.hpp"
#include "emgs/glasso.hpp"
#include "emgs/io_json.hpp"
#include "emgs/simulate.hpp"

// Batch front-end: simulate | fit | path | cv | impute | evaluate.
// Every stochastic run takes a seed (default 0), echoed into the output.
// Exit codes: 0 ok, 2 validation failure, 1 numerical abort / bad input.

namespace {

using emgs::json;

struct GridSpec {
  double min = 0.01;
  double max = 1.0;
  int count = 40;
  bool log_spaced = true;
  std::string raw;
};

GridSpec parse_grid(const std::string& s) {
  GridSpec g;
  g.raw = s;
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string cur;
  while (std::getline(ss, cur, ':')) parts.push_back(cur);
  if (parts.size() < 3 || parts.size() > 4)
    throw CLI::ValidationError("--grid", "expected min:max:count[:log]");
  g.min = std::stod(parts[0]);
  g.max = std::stod(parts[1]);
  g.count = std::stoi(parts[2]);
  g.log_spaced = parts.size() == 4 && parts[3] == "log";
  if (!(g.max > g.min) || g.count < 1)
    throw CLI::ValidationError("--grid", "need max > min and count >= 1");
  return g;
}

std::vector<double> make_grid(const GridSpec& g) {
  std::vector<double> out;
  if (g.count == 1) return {g.min};
  for (int i = 0; i < g.count; ++i) {
    double t = static_cast<double>(i) / (g.count - 1);
    out.push_back(g.log_spaced
                      ? std::exp(std::log(g.min) +
                                 t * (std::log(g.max) - std::log(g.min)))
                      : g.min + t * (g.max - g.min));
  }
  return out;
}

emgs::Method parse_method(const std::string& m) {
  if (m == "emgs") return emgs::Method::Emgs;
  if (m == "emgs-copula") return emgs::Method::EmgsCopula;
  if (m == "glasso") return emgs::Method::Glasso;
  throw CLI::ValidationError("--method", "unknown method " + m);
}

// Group file: lines "column_name,group_index" with 1-based groups.
std::vector<int> read_groups(const std::string& path,
                             const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open groups file " + path);
  std::map<std::string, int> by_name;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("malformed groups line: " + line);
    by_name[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
  }
  std::vector<int> groups;
  for (const auto& c : columns) {
    auto it = by_name.find(c);
    if (it == by_name.end())
      throw std::runtime_error("groups file missing column " + c);
    groups.push_back(it->second);
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw std::runtime_error("groups file references unknown column " +
                             by_name.begin()->first);
  return groups;
}

struct CommonOpts {
  std::string data_path;
  std::string out_path = "result.json";
  std::string method = "emgs";
  std::string kinds = "infer";  // infer | continuous | ordinal
  std::string groups_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool no_center = false;
  bool standardize = false;
  emgs::Hyperparams hp;
  int saem_iter = 200;
  int saem_samples = 5;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_v0_default = true) {
  cmd->add_option("--data", o.data_path, "input CSV")->required();
  cmd->add_option("--out", o.out_path, "output JSON path");
  cmd->add_option("--method", o.method, "emgs | emgs-copula | glasso");
  cmd->add_option("--kinds", o.kinds,
                  "column kinds: infer | continuous | ordinal");
  cmd->add_option("--groups", o.groups_path, "variable,group CSV");
  cmd->add_option("--seed", o.seed, "rng seed (recorded in output)");
  cmd->add_option("--jobs", o.jobs, "max parallel fold jobs");
  cmd->add_flag("--no-center", o.no_center, "skip column centering");
  cmd->add_flag("--standardize", o.standardize, "unit-variance columns");
  if (with_v0_default) cmd->add_option("--v0", o.hp.v0, "spike std. dev.");
  cmd->add_option("--v1", o.hp.v1, "slab std. dev.");
  cmd->add_option("--lambda", o.hp.lambda, "diagonal exponential rate");
  cmd->add_option("--a", o.hp.a, "Beta prior a");
  cmd->add_option("--b", o.hp.b, "Beta prior b");
  cmd->add_option("--a-tau", o.hp.a_tau, "Gamma prior a_tau (groups)");
  cmd->add_option("--b-tau", o.hp.b_tau, "Gamma prior b_tau (groups)");
  cmd->add_option("--max-iter", o.hp.max_iter, "ECM iteration cap");
  cmd->add_option("--tol", o.hp.tol, "convergence tolerance");
  cmd->add_option("--saem-iter", o.saem_iter, "SAEM outer iterations");
  cmd->add_option("--saem-samples", o.saem_samples, "SAEM samples per iter");
}

emgs::Dataset load_data(const CommonOpts& o) {
  emgs::Dataset data = emgs::read_csv(o.data_path);
  if (o.kinds == "continuous")
    std::fill(data.kinds.begin(), data.kinds.end(),
              emgs::ColumnKind::Continuous);
  else if (o.kinds == "ordinal")
    std::fill(data.kinds.begin(), data.kinds.end(),
              emgs::ColumnKind::Ordinal);
  else if (o.kinds != "infer")
    throw std::runtime_error("unknown --kinds value " + o.kinds);
  if (!o.no_center) data = emgs::center_columns(data);
  if (o.standardize) data = emgs::scale_columns(data);
  return data;
}

json config_echo(const CommonOpts& o, const std::string& subcommand) {
  return json{{"subcommand", subcommand},
              {"data", o.data_path},
              {"method", o.method},
              {"kinds", o.kinds},
              {"groups", o.groups_path},
              {"seed", o.seed},
              {"jobs", o.jobs},
              {"center", !o.no_center},
              {"standardize", o.standardize},
              {"v0", o.hp.v0},
              {"v1", o.hp.v1},
              {"lambda", o.hp.lambda},
              {"a", o.hp.a},
              {"b", o.hp.b},
              {"a_tau", o.hp.a_tau},
              {"b_tau", o.hp.b_tau},
              {"max_iter", o.hp.max_iter},
              {"tol", o.hp.tol},
              {"saem_iter", o.saem_iter},
              {"saem_samples", o.saem_samples}};
}

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

int validate_or_fail(const emgs::Hyperparams& hp, const emgs::Dataset& data) {
  auto rep = emgs::validate(hp, data);
  if (!rep.ok()) {
    for (const auto& v : rep.violations)
      std::cerr << "validation: " << v << "\n";
    return 2;
  }
  return 0;
}

json path_summary(const emgs::PathResult& path) {
  json arr = json::array();
  for (std::size_t i = 0; i < path.v0_grid.size(); ++i) {
    json e = {{"v0", path.v0_grid[i]},
              {"iterations", path.fits[i].iterations},
              {"converged", path.fits[i].converged},
              {"edges_pstar", emgs::edge_count(path.fits[i].adjacency)}};
    if (!path.cv_scores.empty()) e["cv_score"] = path.cv_scores[i];
    arr.push_back(e);
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse precision matrix estimation via spike-and-slab ECM"};
  app.require_subcommand(1);

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "generate data CSV + truth JSON");
  emgs::SimSpec spec;
  std::string family = "ar1", margin = "gaussian";
  std::string out_data = "data.csv", out_truth = "truth.json";
  sim->add_option("--family", family, "ar1 | ar2 | random | cluster");
  sim->add_option("--p", spec.p)->required();
  sim->add_option("--n", spec.n)->required();
  sim->add_option("--prob", spec.edge_prob, "edge probability");
  sim->add_option("--nclusters", spec.n_clusters, "0 = max{2, p/20}");
  sim->add_option("--margin", margin, "gaussian | poisson");
  sim->add_option("--theta", spec.theta, "Poisson mean");
  sim->add_option("--missing-rate", spec.missing_rate);
  sim->add_option("--seed", spec.seed);
  sim->add_option("--out-data", out_data);
  sim->add_option("--out-truth", out_truth);

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "single fit at fixed v0 (or rho)");
  CommonOpts fo;
  add_common(fit, fo);

  // --- path ---
  auto* pathc = app.add_subcommand("path", "regularization path over v0");
  CommonOpts po;
  std::string grid_str = "0.01:1:40:log";
  std::string path_csv;
  add_common(pathc, po, false);
  pathc->add_option("--grid", grid_str, "min:max:count[:log]");
  pathc->add_option("--path-csv", path_csv, "tidy per-edge CSV output");

  // --- cv ---
  auto* cvc = app.add_subcommand("cv", "K-fold cross-validated selection");
  CommonOpts co;
  std::string cv_grid_str = "0.01:1:40:log";
  std::string cv_path_csv;
  int folds = 5;
  add_common(cvc, co, false);
  cvc->add_option("--grid", cv_grid_str, "min:max:count[:log]");
  cvc->add_option("--folds", folds, "number of CV folds");
  cvc->add_option("--path-csv", cv_path_csv, "tidy per-edge CSV output");

  // --- impute ---
  auto* imp = app.add_subcommand(
      "impute", "hide cells at random, score imputation methods");
  CommonOpts io;
  double hide_rate = 0.2;
  add_common(imp, io);
  imp->add_option("--rate", hide_rate, "fraction of cells to hide");

  // --- evaluate ---
  auto* ev = app.add_subcommand("evaluate", "metrics against a truth JSON");
  std::string res_path, truth_path, metrics_out = "metrics.json";
  ev->add_option("--result", res_path, "result JSON from fit/path/cv")
      ->required();
  ev->add_option("--truth", truth_path, "truth JSON from simulate")
      ->required();
  ev->add_option("--out", metrics_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      if (family == "ar1") spec.family = emgs::GraphFamily::Ar1;
      else if (family == "ar2") spec.family = emgs::GraphFamily::Ar2;
      else if (family == "random") spec.family = emgs::GraphFamily::Random;
      else if (family == "cluster") spec.family = emgs::GraphFamily::Cluster;
      else throw std::runtime_error("unknown family " + family);
      spec.margin = margin == "poisson" ? emgs::Margin::Poisson
                                        : emgs::Margin::Gaussian;
      auto [truth, data] = emgs::simulate(spec);
      emgs::write_csv(data, out_data);
      emgs::write_json(emgs::truth_to_json(truth, spec), out_truth);
      return 0;
    }

    if (*fit) {
      Stopwatch sw;
      emgs::Dataset data = load_data(fo);
      if (!fo.groups_path.empty())
        fo.hp.groups = read_groups(fo.groups_path, data.column_names);
      if (int rc = validate_or_fail(fo.hp, data)) return rc;
      emgs::GraphEstimate est;
      emgs::Method method = parse_method(fo.method);
      if (method == emgs::Method::Emgs) {
        est = emgs::fit_ecm(data, fo.hp);
      } else if (method == emgs::Method::EmgsCopula) {
        emgs::SaemSchedule sched;
        sched.total_iter = fo.saem_iter;
        sched.samples_per_iter = fo.saem_samples;
        est = emgs::fit_copula(data, fo.hp, sched, fo.seed);
      } else {
        Eigen::MatrixXd S = emgs::crossprod_observed(data) /
                            static_cast<double>(data.n());
        est = emgs::glasso_as_estimate(emgs::glasso_fit(S, fo.hp.v0),
                                       fo.hp.v0);
      }
      json out = {{"config", config_echo(fo, "fit")},
                  {"seed", fo.seed},
                  {"estimate", emgs::estimate_to_json(est)},
                  {"iterations", est.iterations}};
      out["wall_clock_ms"] = sw.ms();
      emgs::write_json(out, fo.out_path);
      return 0;
    }

    auto run_path = [&](CommonOpts& o, const std::string& gstr,
                        const std::string& csv_out, int k_folds,
                        const std::string& sub) -> int {
      Stopwatch sw;
      emgs::Dataset data = load_data(o);
      if (!o.groups_path.empty())
        o.hp.groups = read_groups(o.groups_path, data.column_names);
      if (int rc = validate_or_fail(o.hp, data)) return rc;
      GridSpec gs = parse_grid(gstr);
      std::vector<double> grid = make_grid(gs);
      emgs::PathOptions opts;
      opts.method = parse_method(o.method);
      opts.seed = o.seed;
      opts.jobs = o.jobs;
      opts.schedule.total_iter = o.saem_iter;
      opts.schedule.samples_per_iter = o.saem_samples;
      emgs::PathResult path =
          k_folds > 0
              ? emgs::cv_select(data, o.hp, grid, k_folds, o.seed, opts)
              : emgs::fit_path(data, o.hp, grid, opts);
      json out = {{"config", config_echo(o, sub)},
                  {"seed", o.seed},
                  {"grid", grid},
                  {"path", path_summary(path)}};
      if (k_folds > 0) {
        out["selection"] = {{"v0", path.v0_selected},
                            {"cv_scores", path.cv_scores},
                            {"folds", k_folds}};
        out["estimate"] = emgs::estimate_to_json(emgs::selected_fit(path));
      } else {
        out["estimate"] = emgs::estimate_to_json(path.fits.back());
      }
      int total_iter = 0;
      for (const auto& f : path.fits) total_iter += f.iterations;
      out["iterations"] = total_iter;
      out["wall_clock_ms"] = sw.ms();
      emgs::write_json(out, o.out_path);
      if (!csv_out.empty()) emgs::write_path_csv(path, csv_out);
      return 0;
    };

    if (*pathc) return run_path(po, grid_str, path_csv, 0, "path");
    if (*cvc) return run_path(co, cv_grid_str, cv_path_csv, folds, "cv");

    if (*imp) {
      Stopwatch sw;
      emgs::Dataset data = load_data(io);
      if (int rc = validate_or_fail(io.hp, data)) return rc;
      std::mt19937_64 rng(io.seed);
      std::bernoulli_distribution hide(hide_rate);
      emgs::Adjacency mask(data.n(), data.p());
      for (Eigen::Index i = 0; i < data.n(); ++i)
        for (Eigen::Index j = 0; j < data.p(); ++j)
          mask(i, j) = hide(rng);
      json out = {{"config", config_echo(io, "impute")},
                  {"seed", io.seed},
                  {"rate", hide_rate},
                  {"mse",
                   {{"emgs", emgs::impute_score(
                                 data, mask, emgs::ImputeMethod::Emgs, io.hp)},
                    {"empirical",
                     emgs::impute_score(
                         data, mask, emgs::ImputeMethod::EmpiricalCovariance)},
                    {"column_mean",
                     emgs::impute_score(data, mask,
                                        emgs::ImputeMethod::ColumnMean)}}}};
      out["wall_clock_ms"] = sw.ms();
      emgs::write_json(out, io.out_path);
      return 0;
    }

    if (*ev) {
      Stopwatch sw;
      json res = emgs::read_json(res_path);
      json tru = emgs::read_json(truth_path);
      Eigen::MatrixXd omega_hat =
          emgs::matrix_from_json(res.at("estimate").at("omega"));
      Eigen::MatrixXd pstar =
          emgs::matrix_from_json(res.at("estimate").at("pstar"));
      Eigen::MatrixXd omega_true = emgs::matrix_from_json(tru.at("omega"));
      emgs::Adjacency adj_true =
          emgs::adjacency_from_json(tru.at("adjacency"));
      std::size_t k = emgs::edge_count(adj_true);
      json metrics = {
          {"fnorm", emgs::frobenius_error(omega_hat, omega_true)},
          {"snorm", emgs::spectral_error(omega_hat, omega_true)},
          {"auc", emgs::roc_auc(omega_hat, adj_true)},
          {"f1_topk",
           emgs::f1_score(emgs::threshold_top_k(omega_hat, k), adj_true)},
          {"f1_pstar",
           emgs::f1_score(emgs::threshold_pstar(pstar, 0.5), adj_true)}};
      json out = {{"result", res_path},
                  {"truth", truth_path},
                  {"metrics", metrics}};
      out["wall_clock_ms"] = sw.ms();
      emgs::write_json(out, metrics_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
