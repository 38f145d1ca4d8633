#ifndef AERIALQP_SRC_YAML_UTIL_HPP_
#define AERIALQP_SRC_YAML_UTIL_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include "aerialqp/model.hpp"

namespace aerialqp::yaml_util {

inline YAML::Node require(const YAML::Node& node, const std::string& key, const std::string& where) {
  if (!node.IsMap()) throw ParseError(where + ": expected a mapping");
  YAML::Node child = node[key];
  if (!child) throw ParseError(where + ": missing key '" + key + "'");
  return child;
}

inline double read_double(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ParseError(where + ": expected a number");
  }
}

inline double get_double(const YAML::Node& node, const std::string& key, const std::string& where) {
  return read_double(require(node, key, where), where + "." + key);
}

inline double get_double_or(const YAML::Node& node, const std::string& key, double fallback, const std::string& where) {
  if (!node[key]) return fallback;
  return read_double(node[key], where + "." + key);
}

inline std::vector<double> read_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ParseError(where + ": expected a list");
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(read_double(node[i], where));
  return out;
}

inline Eigen::Vector3d read_vec3(const YAML::Node& node, const std::string& where) {
  const auto v = read_list(node, where);
  if (v.size() != 3) throw ParseError(where + ": expected 3 entries");
  return {v[0], v[1], v[2]};
}

// A list of numbers is a diagonal; a list of lists is a dense row-major matrix.
inline Eigen::MatrixXd read_matrix(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) throw ParseError(where + ": expected a non-empty list");
  if (!node[0].IsSequence()) {
    const auto diag = read_list(node, where);
    return Eigen::Map<const Eigen::VectorXd>(diag.data(), static_cast<Eigen::Index>(diag.size())).asDiagonal();
  }
  const auto rows = static_cast<Eigen::Index>(node.size());
  Eigen::MatrixXd out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = read_list(node[static_cast<std::size_t>(r)], where);
    if (r == 0) out.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != out.cols()) throw ParseError(where + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = row[static_cast<std::size_t>(c)];
  }
  return out;
}

inline Eigen::Matrix3d read_mat3(const YAML::Node& node, const std::string& where) {
  const Eigen::MatrixXd m = read_matrix(node, where);
  if (m.rows() != 3 || m.cols() != 3) throw ParseError(where + ": expected a 3x3 matrix or 3 diagonal entries");
  return m;
}

inline YAML::Node parse_document(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace aerialqp::yaml_util

#endif  // AERIALQP_SRC_YAML_UTIL_HPP_
