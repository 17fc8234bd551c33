#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "emgs/ecm.hpp"
#include "emgs/evaluate.hpp"
#include "emgs/simulate.hpp"

// JSON serialization of matrices (row-major arrays with explicit
// dimensions), truth files, and result files.

namespace emgs {

using nlohmann::json;

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(i++);
  return m;
}

inline json adjacency_to_json(const Adjacency& a) {
  json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  std::vector<int> data;
  data.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      data.push_back(a(r, c) ? 1 : 0);
  j["data"] = data;
  return j;
}

inline Adjacency adjacency_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  Adjacency a(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      a(r, c) = data.at(i++).get<int>() != 0;
  return a;
}

inline json truth_to_json(const TrueGraph& g, const SimSpec& spec) {
  json j;
  j["omega"] = matrix_to_json(g.omega);
  j["adjacency"] = adjacency_to_json(g.adjacency);
  j["spec"] = {{"family", family_name(spec.family)},
               {"p", spec.p},
               {"n", spec.n},
               {"edge_prob", spec.edge_prob},
               {"margin", spec.margin == Margin::Poisson ? "poisson"
                                                         : "gaussian"},
               {"theta", spec.theta},
               {"missing_rate", spec.missing_rate},
               {"seed", spec.seed}};
  return j;
}

inline json estimate_to_json(const GraphEstimate& est) {
  json j;
  j["omega"] = matrix_to_json(est.omega);
  j["pstar"] = matrix_to_json(est.pstar);
  j["adjacency"] = adjacency_to_json(est.adjacency);
  j["v0"] = est.v0_selected;
  j["pi"] = est.pi;
  j["iterations"] = est.iterations;
  j["converged"] = est.converged;
  if (est.tau.size() > 0) j["tau"] = matrix_to_json(est.tau);
  json trace = json::array();
  for (const auto& [it, q] : est.trace) trace.push_back({{"iter", it}, {"q", q}});
  j["trace"] = trace;
  return j;
}

inline void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// Tidy per-edge path CSV for external plotting: (v0, j, k, omega, pstar).
inline void write_path_csv(const PathResult& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << "v0,j,k,omega,pstar\n";
  out.precision(17);
  for (std::size_t i = 0; i < path.v0_grid.size(); ++i) {
    const auto& fit = path.fits[i];
    for (Eigen::Index j = 0; j < fit.omega.rows(); ++j)
      for (Eigen::Index k = j + 1; k < fit.omega.cols(); ++k)
        out << path.v0_grid[i] << "," << (j + 1) << "," << (k + 1) << ","
            << fit.omega(j, k) << "," << fit.pstar(j, k) << "\n";
  }
}

}  // namespace emgs
