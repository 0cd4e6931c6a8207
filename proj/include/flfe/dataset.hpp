#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flfe/common.hpp"

namespace flfe {

enum class ColumnKind { numeric, discrete };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Numeric columns hold parsed reals; discrete columns hold dense
  /// category ids (first occurrence order). Discrete columns are never
  /// eligible for transformation.
  Eigen::VectorXd values;
};

/// One tabular classification dataset: feature columns plus a dense
/// integer label vector. Immutable after load.
struct Table {
  std::string name;
  Eigen::Index rows = 0;
  std::vector<Column> columns;
  std::vector<int> label;
  int n_classes = 0;

  std::vector<std::string> numeric_feature_names() const;
  const Column& column(const std::string& name) const;

  /// Numeric feature matrix in column order, one column per numeric feature.
  Eigen::MatrixXd numeric_matrix() const;
};

/// One named numeric feature vector plus its owning participant.
struct FeatureColumn {
  std::string name;
  std::string owner;
  Eigen::VectorXd values;
};

/// A participant's share of a vertically partitioned table: disjoint
/// feature subsets, identical rows and labels across parties.
struct PartyView {
  int party_id = 0;
  std::string name;
  std::vector<FeatureColumn> features;
  std::vector<int> label;
  int n_classes = 0;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(label.size()); }
};

/// Parses a CSV file (UTF-8, header row, comma separator, '.' decimal
/// point) into a Table. A column is numeric iff every non-empty cell
/// parses as a real; a numeric column containing an empty cell is
/// rejected. Label values are mapped to dense ids in first-occurrence
/// order and must take at least two distinct values.
Table load_table(const std::filesystem::path& path, const std::string& label_column = "label");

using PartyAssignment = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Splits a table vertically: each party receives the named numeric
/// columns, and the label is replicated to every party. Assignment sets
/// must be disjoint and reference numeric columns only.
std::vector<PartyView> vertical_split(const Table& table, const PartyAssignment& assignment);

/// Number of cross-party binary transformation candidates:
/// b/2 * ((sum m_d)^2 - sum m_d^2).
std::uint64_t search_space_size(const std::vector<std::uint64_t>& m_per_party, std::uint64_t binary_kinds);

struct Fold {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Plain shuffled k-fold split (not stratified). Test sets partition
/// [0, rows) and their sizes differ by at most one.
std::vector<Fold> kfold_indices(Eigen::Index rows, int k, std::uint64_t seed);

}  // namespace flfe
