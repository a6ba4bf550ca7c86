#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace edgeplan::jsonio {

using json = nlohmann::json;

json from_matrix(const Eigen::MatrixXd& m);
json from_vector(const Eigen::VectorXd& v);

/// Reads a row-major nested array. Throws ParseError naming `what` on a shape
/// mismatch; pass -1 to accept any extent.
Eigen::MatrixXd to_matrix(const json& j, int rows, int cols, const std::string& what);
Eigen::VectorXd to_vector(const json& j, int size, const std::string& what);

/// Member lookup that throws ParseError when `key` is absent.
const json& require(const json& j, const std::string& key);

}  // namespace edgeplan::jsonio
