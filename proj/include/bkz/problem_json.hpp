#pragma once

// Problem (de)serialization. One JSON document per instance:
//
//   {
//     "schema": "bkz-problem/1",
//     "kind": "quadratic_system" | "linear_simplex" | "lsd",
//     "n": <equations>, "d": <unknowns>,
//     "payload": { ... kind-specific, matrices flattened row-major ... },
//     "known_solution": [ ... ],            // optional
//     "generator": {"name", "seed", "params"}  // optional provenance
//   }
//
// Payloads: quadratic_system -> a_list (n arrays of d*d), b_list (n arrays
// of d), c_list (n); linear_simplex -> a (n*d), b (n); lsd -> r, m, target
// (m*m). LSD equation ordering is canonical (pairs (i,j), i <= j,
// lexicographic) and is not stored. Doubles survive a round trip bit-exactly
// (shortest-round-trip formatting on write, exact parse on read).

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bkz/problems.hpp"

namespace bkz {

struct GeneratorInfo {
  std::string name;
  std::uint64_t seed = 0;
  nlohmann::json params;
};

namespace detail {

inline nlohmann::json matrix_row_major(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out.push_back(m(r, c));
    }
  }
  return out;
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::MatrixXd matrix_from_row_major(const nlohmann::json& a,
                                             Eigen::Index rows,
                                             Eigen::Index cols,
                                             const char* what) {
  require(a.is_array() && static_cast<Eigen::Index>(a.size()) == rows * cols,
          what);
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = a[static_cast<std::size_t>(k++)].get<double>();
    }
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& a,
                                        Eigen::Index size, const char* what) {
  require(a.is_array() && static_cast<Eigen::Index>(a.size()) == size, what);
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v[i] = a[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace detail

inline nlohmann::json problem_to_json(
    const Problem& p, const std::optional<GeneratorInfo>& info = {}) {
  nlohmann::json doc;
  doc["schema"] = "bkz-problem/1";
  doc["kind"] = problem_kind_name(p.kind());
  doc["n"] = p.num_equations();
  doc["d"] = p.dim();
  nlohmann::json payload;
  switch (p.kind()) {
    case ProblemKind::QuadraticSystem: {
      auto a_list = nlohmann::json::array();
      auto b_list = nlohmann::json::array();
      for (Eigen::Index i = 0; i < p.num_equations(); ++i) {
        a_list.push_back(detail::matrix_row_major(p.quad_matrix(i)));
        b_list.push_back(detail::vector_json(p.quad_linear(i)));
      }
      payload["a_list"] = std::move(a_list);
      payload["b_list"] = std::move(b_list);
      payload["c_list"] = detail::vector_json(p.quad_constants());
      break;
    }
    case ProblemKind::LinearSimplexSystem:
      payload["a"] = detail::matrix_row_major(p.lin_matrix());
      payload["b"] = detail::vector_json(p.lin_rhs());
      break;
    case ProblemKind::LSDProblem:
      payload["r"] = p.lsd_rows();
      payload["m"] = p.lsd_cols();
      payload["target"] = detail::matrix_row_major(p.lsd_target());
      break;
  }
  doc["payload"] = std::move(payload);
  if (p.known_solution().has_value()) {
    doc["known_solution"] = detail::vector_json(*p.known_solution());
  }
  if (info.has_value()) {
    doc["generator"] = {
        {"name", info->name}, {"seed", info->seed}, {"params", info->params}};
  }
  return doc;
}

inline Problem problem_from_json(const nlohmann::json& doc) {
  require(doc.is_object() && doc.value("schema", "") == "bkz-problem/1",
          "problem json: unknown schema");
  require(doc.contains("kind") && doc.contains("n") && doc.contains("d") &&
              doc.contains("payload"),
          "problem json: missing required field");
  const std::string kind = doc["kind"].get<std::string>();
  const auto n = doc["n"].get<Eigen::Index>();
  const auto d = doc["d"].get<Eigen::Index>();
  require(n >= 1 && d >= 1, "problem json: dimensions must be positive");
  const auto& payload = doc["payload"];

  std::optional<Eigen::VectorXd> known;
  if (doc.contains("known_solution")) {
    known = detail::vector_from_json(doc["known_solution"], d,
                                     "problem json: bad known_solution");
  }

  if (kind == "quadratic_system") {
    const auto& a_json = payload.at("a_list");
    const auto& b_json = payload.at("b_list");
    require(a_json.is_array() && static_cast<Eigen::Index>(a_json.size()) == n &&
                b_json.is_array() &&
                static_cast<Eigen::Index>(b_json.size()) == n,
            "problem json: quadratic payload lengths");
    std::vector<Eigen::MatrixXd> a_list;
    std::vector<Eigen::VectorXd> b_list;
    a_list.reserve(static_cast<std::size_t>(n));
    b_list.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      a_list.push_back(detail::matrix_from_row_major(
          a_json[static_cast<std::size_t>(i)], d, d,
          "problem json: bad quadratic matrix"));
      b_list.push_back(
          detail::vector_from_json(b_json[static_cast<std::size_t>(i)], d,
                                   "problem json: bad quadratic vector"));
    }
    Eigen::VectorXd c = detail::vector_from_json(
        payload.at("c_list"), n, "problem json: bad constant list");
    return Problem::quadratic_system(std::move(a_list), std::move(b_list),
                                     std::move(c), std::move(known));
  }
  if (kind == "linear_simplex") {
    Eigen::MatrixXd a = detail::matrix_from_row_major(
        payload.at("a"), n, d, "problem json: bad linear matrix");
    Eigen::VectorXd b = detail::vector_from_json(payload.at("b"), n,
                                                 "problem json: bad rhs");
    return Problem::linear_simplex(std::move(a), std::move(b),
                                   std::move(known));
  }
  if (kind == "lsd") {
    const auto r = payload.at("r").get<Eigen::Index>();
    const auto m = payload.at("m").get<Eigen::Index>();
    require(r >= 1 && m >= 1 && r * m == d && m * (m + 1) / 2 == n,
            "problem json: lsd shape mismatch");
    Eigen::MatrixXd target = detail::matrix_from_row_major(
        payload.at("target"), m, m, "problem json: bad lsd target");
    return Problem::lsd(r, std::move(target), std::move(known));
  }
  throw ContractViolation("problem json: unknown kind '" + kind + "'");
}

inline std::optional<GeneratorInfo> generator_info_from_json(
    const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("generator")) return std::nullopt;
  const auto& g = doc["generator"];
  GeneratorInfo info;
  info.name = g.value("name", "");
  info.seed = g.value("seed", std::uint64_t{0});
  info.params = g.value("params", nlohmann::json::object());
  return info;
}

inline void save_problem(const std::string& path, const Problem& p,
                         const std::optional<GeneratorInfo>& info = {}) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << problem_to_json(p, info).dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed problem file " + path + ": " +
                             e.what());
  }
  return problem_from_json(doc);
}

}  // namespace bkz
