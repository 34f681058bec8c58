#include "blr/dataset.hpp"

#include "blr/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace blr {

void Dataset::validate() const {
  const Eigen::Index n = rows();
  if (x.rows() != n) throw InvalidArgument("X has " + std::to_string(x.rows()) + " rows, Y has " + std::to_string(n));
  if (z.cols() > 0 && z.rows() != n) throw InvalidArgument("Z row count does not match Y");
  if (static_cast<Eigen::Index>(x_names.size()) != x.cols()) throw InvalidArgument("X column names do not match X");
  if (static_cast<Eigen::Index>(z_names.size()) != z.cols()) throw InvalidArgument("Z column names do not match Z");
  if ((x.array() > 1).any()) throw InvalidArgument("X entries must be 0 or 1");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& idx) const {
  Dataset out;
  out.x = x(idx, Eigen::all);
  out.z = z.cols() > 0 ? Eigen::MatrixXd(z(idx, Eigen::all)) : Eigen::MatrixXd(static_cast<Eigen::Index>(idx.size()), 0);
  out.y = y(idx);
  out.x_names = x_names;
  out.z_names = z_names;
  out.y_name = y_name;
  out.truth = truth;
  return out;
}

std::vector<std::string> default_x_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  return names;
}

void write_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  std::vector<std::string> header = data.x_names;
  header.insert(header.end(), data.z_names.begin(), data.z_names.end());
  header.push_back(data.y_name);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << (j ? "," : "") << int(data.x(i, j));
    for (Eigen::Index j = 0; j < data.q_fixed(); ++j) out << (data.p() + j ? "," : "") << data.z(i, j);
    out << (data.p() + data.q_fixed() ? "," : "") << data.y(i) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_csv(out, data);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r\""));
    cell.erase(cell.find_last_not_of(" \t\r\"") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t row, const std::string& col) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("row " + std::to_string(row) + ", column " + col + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& response, const std::vector<std::string>& fixed) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty CSV input");
  const auto header = split(line);
  auto find = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t y_col = find(response);
  if (y_col < 0) throw InvalidArgument("response column '" + response + "' not found");
  std::vector<std::ptrdiff_t> z_cols;
  for (const auto& f : fixed) {
    auto c = find(f);
    if (c < 0) throw InvalidArgument("fixed column '" + f + "' not found");
    z_cols.push_back(c);
  }
  std::vector<std::ptrdiff_t> x_cols;
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(header.size()); ++c) {
    if (c != y_col && std::find(z_cols.begin(), z_cols.end(), c) == z_cols.end()) x_cols.push_back(c);
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw InvalidArgument("row " + std::to_string(rows.size() + 1) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Dataset data;
  data.y_name = response;
  data.x.resize(n, static_cast<Eigen::Index>(x_cols.size()));
  data.z.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  data.y.resize(n);
  for (auto c : x_cols) data.x_names.push_back(header[c]);
  data.z_names = fixed;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i];
    data.y(i) = to_double(r[y_col], i + 1, response);
    for (std::size_t j = 0; j < z_cols.size(); ++j) data.z(i, j) = to_double(r[z_cols[j]], i + 1, header[z_cols[j]]);
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      const std::string& s = r[x_cols[j]];
      if (s != "0" && s != "1")
        throw InvalidArgument("row " + std::to_string(i + 1) + ", column " + header[x_cols[j]] +
                              ": binary covariate expected, got '" + s + "' (declare it with --fixed?)");
      data.x(i, j) = static_cast<std::uint8_t>(s[0] - '0');
    }
  }
  return data;
}

Dataset read_csv(const std::filesystem::path& path, const std::string& response, const std::vector<std::string>& fixed) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_csv(in, response, fixed);
}

void write_truth(const std::filesystem::path& path, const std::vector<LogicTree>& truth) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (const auto& t : truth) out << to_string(t) << '\n';
}

std::vector<LogicTree> read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<LogicTree> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_expression(line));
  }
  return out;
}

}  // namespace blr
