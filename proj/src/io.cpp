// IO helpers: shortest round-trip double formatting, RFC-4180 CSV with CRLF
// line endings, plain-text numeric loading, and JSON conversions for complex
// matrices (entries as [re, im] pairs).

#include "lopblock/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace lop {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("failed to format a double");
  return std::string(buf, res.ptr);
}

std::string csv_record(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    const std::string& f = fields[i];
    const bool needs_quote =
        f.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) {
      out += f;
    } else {
      out.push_back('"');
      for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    }
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<double> vals;
  std::string tok;
  auto flush = [&]() {
    // trim whitespace
    std::size_t b = tok.find_first_not_of(" \t");
    std::size_t e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) {
      tok.clear();
      return;
    }
    const std::string s = tok.substr(b, e - b + 1);
    tok.clear();
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw std::runtime_error("bad number in " + path + ": '" + s + "'");
    vals.push_back(v);
  };
  for (char c : text) {
    if (c == ',' || c == '\n' || c == '\r')
      flush();
    else
      tok.push_back(c);
  }
  flush();
  Eigen::VectorXd out(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    out[static_cast<int>(i)] = vals[i];
  return out;
}

nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  nlohmann::json data = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.cols(); ++k)
      row.push_back({m(i, k).real(), m(i, k).imag()});
    data.push_back(std::move(row));
  }
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  if (rows < 0 || cols < 0) throw std::runtime_error("negative dimensions");
  const nlohmann::json& data = j.at("data");
  if (static_cast<int>(data.size()) != rows)
    throw std::runtime_error("row count mismatch");
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const nlohmann::json& row = data.at(i);
    if (static_cast<int>(row.size()) != cols)
      throw std::runtime_error("column count mismatch");
    for (int k = 0; k < cols; ++k) {
      const nlohmann::json& cell = row.at(k);
      m(i, k) = std::complex<double>(cell.at(0).get<double>(),
                                     cell.at(1).get<double>());
    }
  }
  return m;
}

nlohmann::json real_vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd real_vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = j.at(i).get<double>();
  return v;
}

nlohmann::json real_matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    data.push_back(std::move(row));
  }
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(data);
  return j;
}

}  // namespace lop
