#include "edgeplan/json_io.hpp"

#include "edgeplan/instance.hpp"

namespace edgeplan::jsonio {

json from_matrix(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json from_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd to_matrix(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected a nested array");
  const int r = static_cast<int>(j.size());
  if (rows >= 0 && r != rows)
    throw ParseError(what + ": expected " + std::to_string(rows) + " rows, got " +
                     std::to_string(r));
  int c = cols;
  if (c < 0) c = r == 0 ? 0 : static_cast<int>(j.front().size());
  Eigen::MatrixXd m(r, c);
  for (int a = 0; a < r; ++a) {
    const json& row = j[a];
    if (!row.is_array() || static_cast<int>(row.size()) != c)
      throw ParseError(what + ": row " + std::to_string(a) + " should have " + std::to_string(c) +
                       " entries");
    for (int b = 0; b < c; ++b) {
      if (!row[b].is_number()) throw ParseError(what + ": non-numeric entry");
      m(a, b) = row[b].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd to_vector(const json& j, int size, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  const int n = static_cast<int>(j.size());
  if (size >= 0 && n != size)
    throw ParseError(what + ": expected " + std::to_string(size) + " entries, got " +
                     std::to_string(n));
  Eigen::VectorXd v(n);
  for (int a = 0; a < n; ++a) {
    if (!j[a].is_number()) throw ParseError(what + ": non-numeric entry");
    v(a) = j[a].get<double>();
  }
  return v;
}

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError("missing key '" + key + "'");
  return j.at(key);
}

}  // namespace edgeplan::jsonio
