#pragma once

#include <json.hpp>

#include <fstream>
#include <string>

#include "rollgov/admissible_set.hpp"
#include "rollgov/linearization.hpp"

namespace rollgov {

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const size_t rows = j.size();
  const size_t cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

} // namespace detail

inline nlohmann::json to_json(const LinearModel& m) {
  return nlohmann::json{{"A", detail::matrix_to_json(m.A)},
                        {"B", detail::matrix_to_json(m.B)},
                        {"C", detail::matrix_to_json(m.C)},
                        {"D", detail::matrix_to_json(m.D)},
                        {"x0", detail::matrix_to_json(m.x0)},
                        {"delta0", m.delta0},
                        {"y0", detail::matrix_to_json(m.y0)},
                        {"u0", m.u0},
                        {"dt", m.dt},
                        {"discrete", m.discrete},
                        {"id", m.id}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.A = detail::matrix_from_json(j["A"]);
  m.B = detail::matrix_from_json(j["B"]);
  m.C = detail::matrix_from_json(j["C"]);
  m.D = detail::matrix_from_json(j["D"]);
  m.x0 = detail::matrix_from_json(j["x0"]);
  m.delta0 = j["delta0"].get<double>();
  m.y0 = detail::matrix_from_json(j["y0"]);
  m.u0 = j["u0"].get<double>();
  m.dt = j["dt"].get<double>();
  m.discrete = j["discrete"].get<bool>();
  m.id = j["id"].get<std::string>();
  return m;
}

/// Reproducibility snapshot of an MPL bank (operating points + matrices).
inline nlohmann::json to_json(const MplBank& bank) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : bank.models) models.push_back(to_json(m));
  return nlohmann::json{{"models", models}};
}

inline MplBank bank_from_json(const nlohmann::json& j) {
  MplBank bank;
  for (const auto& mj : j["models"]) bank.models.push_back(linear_model_from_json(mj));
  bank.validate();
  return bank;
}

inline void save_bank(const MplBank& bank, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bank: " + path);
  out << to_json(bank).dump(2) << "\n";
}

inline MplBank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bank: " + path);
  nlohmann::json j;
  in >> j;
  return bank_from_json(j);
}

/// Audit dump of an admissible set (dense rows with provenance fields).
inline nlohmann::json to_json(const AdmissibleSet& s) {
  return nlohmann::json{{"A_O", detail::matrix_to_json(s.A_O)},
                        {"b_O", detail::matrix_to_json(s.b_O)},
                        {"horizon", s.horizon},
                        {"epsilon", s.epsilon},
                        {"variant", to_string(s.variant)},
                        {"model_id", s.model_id},
                        {"n_cmd", s.n_cmd},
                        {"n_state", s.n_state},
                        {"n_dist", s.n_dist},
                        {"block_rows", s.block_rows},
                        {"A_y", detail::matrix_to_json(s.A_y)},
                        {"b_y", detail::matrix_to_json(s.b_y)}};
}

inline AdmissibleSet set_from_json(const nlohmann::json& j) {
  AdmissibleSet s;
  s.A_O = detail::matrix_from_json(j["A_O"]);
  s.b_O = detail::matrix_from_json(j["b_O"]);
  s.horizon = j["horizon"].get<int>();
  s.epsilon = j["epsilon"].get<double>();
  const std::string v = j["variant"].get<std::string>();
  s.variant = v == "plain" ? SetVariant::Plain
              : v == "disturbance_augmented" ? SetVariant::DisturbanceAugmented
                                             : SetVariant::EcgAugmented;
  s.model_id = j["model_id"].get<std::string>();
  s.n_cmd = j["n_cmd"].get<int>();
  s.n_state = j["n_state"].get<int>();
  s.n_dist = j["n_dist"].get<int>();
  s.block_rows = j["block_rows"].get<int>();
  s.A_y = detail::matrix_from_json(j["A_y"]);
  s.b_y = detail::matrix_from_json(j["b_y"]);
  return s;
}

inline void save_set(const AdmissibleSet& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write set: " + path);
  out << to_json(s).dump(2) << "\n";
}

inline AdmissibleSet load_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open set: " + path);
  nlohmann::json j;
  in >> j;
  return set_from_json(j);
}

} // namespace rollgov
