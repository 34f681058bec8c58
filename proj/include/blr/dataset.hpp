#pragma once

#include "blr/logic_tree.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace blr {

/// Binary covariates X, optional non-binary covariates Z and the response Y.
struct Dataset {
  BinaryMatrix x;
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  std::string y_name = "Y";
  /// Data-generating trees, when known.
  std::vector<LogicTree> truth;

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q_fixed() const { return z.cols(); }

  /// Throws InvalidArgument when dimensions disagree or X is not 0/1.
  void validate() const;

  /// Rows selected by index, truth carried over.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Default covariate names X1..Xp.
std::vector<std::string> default_x_names(Eigen::Index p);

/// Writes header + rows: X columns, then Z columns, then the response.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);

/// Reads a CSV with a header row. `response` names the Y column, `fixed` the
/// non-binary columns; every other column must be binary. Throws
/// InvalidArgument naming a missing column or a non-binary entry.
Dataset read_csv(std::istream& in, const std::string& response,
                 const std::vector<std::string>& fixed = {});
Dataset read_csv(const std::filesystem::path& path, const std::string& response,
                 const std::vector<std::string>& fixed = {});

/// Ground-truth sidecar: one expression per line in the expression grammar.
void write_truth(const std::filesystem::path& path, const std::vector<LogicTree>& truth);
std::vector<LogicTree> read_truth(const std::filesystem::path& path);

}  // namespace blr
