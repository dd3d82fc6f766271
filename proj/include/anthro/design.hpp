#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"

namespace anthro {

struct DesignMatrix {
  Eigen::MatrixXd values;  // n x p
  std::vector<std::string> names;
  bool has_intercept = false;

  int n() const { return int(values.rows()); }
  int p() const { return int(values.cols()); }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return int(i);
    throw DataError("design column not found: " + name);
  }

  void validate() const {
    if (int(names.size()) != p()) throw DataError("design names/columns mismatch");
    if (!values.allFinite()) throw DataError("design matrix contains non-finite values");
  }
};

class DesignBuilder {
 public:
  explicit DesignBuilder(int n) : n_(n) {}

  DesignBuilder& intercept() {
    if (!cols_.empty()) throw DataError("intercept must be the first column");
    cols_.push_back(Eigen::VectorXd::Ones(n_));
    names_.push_back("const");
    has_intercept_ = true;
    return *this;
  }

  DesignBuilder& add(const std::string& name, const Eigen::VectorXd& col) {
    if (col.size() != n_) throw DataError("column length mismatch: " + name);
    cols_.push_back(col);
    names_.push_back(name);
    return *this;
  }

  // Reference-coded indicators: one column per non-reference level present in
  // `labels`, named prefix=Label.
  DesignBuilder& add_categorical(const std::string& prefix,
                                 const std::vector<int>& codes,
                                 const std::vector<std::string>& labels,
                                 int reference = 0) {
    if (int(codes.size()) != n_) throw DataError("categorical length mismatch: " + prefix);
    for (int level = 0; level < int(labels.size()); ++level) {
      if (level == reference) continue;
      Eigen::VectorXd col = Eigen::VectorXd::Zero(n_);
      for (int i = 0; i < n_; ++i)
        if (codes[i] == level) col[i] = 1.0;
      cols_.push_back(col);
      names_.push_back(prefix + "=" + labels[level]);
    }
    return *this;
  }

  DesignMatrix build() const {
    DesignMatrix d;
    d.values.resize(n_, cols_.size());
    for (std::size_t j = 0; j < cols_.size(); ++j) d.values.col(j) = cols_[j];
    d.names = names_;
    d.has_intercept = has_intercept_;
    d.validate();
    return d;
  }

 private:
  int n_;
  bool has_intercept_ = false;
  std::vector<Eigen::VectorXd> cols_;
  std::vector<std::string> names_;
};

// Appends all squares and pairwise products of the body columns: for j <= k
// the column body_j * body_k, named "A×B" (or "A²" for squares). Adds
// p(p+1)/2 columns.
inline DesignMatrix build_interactions(const DesignMatrix& body) {
  if (body.has_intercept)
    throw DataError("build_interactions expects raw body columns, no intercept");
  if (body.p() < 2) throw DataError("build_interactions needs at least 2 columns");
  const int p = body.p();
  DesignMatrix out;
  out.values.resize(body.n(), p + p * (p + 1) / 2);
  out.values.leftCols(p) = body.values;
  out.names = body.names;
  int col = p;
  for (int j = 0; j < p; ++j)
    for (int k = j; k < p; ++k) {
      out.values.col(col) = body.values.col(j).cwiseProduct(body.values.col(k));
      out.names.push_back(j == k ? body.names[j] + "²"
                                 : body.names[j] + "×" + body.names[k]);
      ++col;
    }
  out.has_intercept = false;
  return out;
}

// [A | B] with concatenated names.
inline DesignMatrix hcat(const DesignMatrix& a, const DesignMatrix& b) {
  if (a.n() != b.n()) throw DataError("hcat row mismatch");
  DesignMatrix out;
  out.values.resize(a.n(), a.p() + b.p());
  out.values << a.values, b.values;
  out.names = a.names;
  out.names.insert(out.names.end(), b.names.begin(), b.names.end());
  out.has_intercept = a.has_intercept;
  return out;
}

inline DesignMatrix append_column(const DesignMatrix& a, const std::string& name,
                                  const Eigen::VectorXd& col) {
  if (col.size() != a.n()) throw DataError("append_column length mismatch");
  DesignMatrix out;
  out.values.resize(a.n(), a.p() + 1);
  out.values << a.values, col;
  out.names = a.names;
  out.names.push_back(name);
  out.has_intercept = a.has_intercept;
  return out;
}

}  // namespace anthro
