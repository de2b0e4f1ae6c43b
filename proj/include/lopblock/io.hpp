#pragma once
// Small IO helpers: shortest round-trip double formatting, RFC-4180 CSV
// (CRLF line endings), numeric vector/matrix loading, JSON conversions for
// complex matrices.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

namespace lop {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

// One RFC-4180 record: fields joined by commas, quoted when needed, CRLF.
std::string csv_record(const std::vector<std::string>& fields);

// Parse a whole CSV document into records of fields (handles quotes, CRLF).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Numbers separated by commas and/or newlines (blank fields ignored).
Eigen::VectorXd read_vector_csv(const std::string& path);

// Complex matrix <-> JSON as {"rows": R, "cols": C, "data": [[..[re,im]..]]}.
nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j);

nlohmann::json real_vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd real_vector_from_json(const nlohmann::json& j);
nlohmann::json real_matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace lop
