#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glfa/family.hpp"

namespace glfa {

struct Triplet {
  int i = 0;
  int j = 0;
  double y = 0.0;
};

// Index/value pairs of the observed cells in one row (idx = column indices)
// or one column (idx = row indices).
struct CellsView {
  std::span<const int> idx;
  std::span<const double> y;
  bool empty() const { return idx.empty(); }
  std::size_t size() const { return idx.size(); }
};

// Sparse store of the observed cells of an N x J matrix, indexed both by row
// and by column. Immutable once built; missingness can be arbitrarily uneven,
// including empty rows or columns.
class ObservationSet {
 public:
  ObservationSet() = default;

  static ObservationSet from_triplets(int N, int J, std::vector<Triplet> cells) {
    if (N <= 0 || J <= 0) throw std::invalid_argument("ObservationSet: N and J must be positive");
    for (const auto& c : cells) {
      if (c.i < 0 || c.i >= N || c.j < 0 || c.j >= J)
        throw std::invalid_argument("ObservationSet: cell (" + std::to_string(c.i) + "," +
                                    std::to_string(c.j) + ") out of range for " +
                                    std::to_string(N) + "x" + std::to_string(J));
      if (!std::isfinite(c.y))
        throw std::invalid_argument("ObservationSet: non-finite value at (" + std::to_string(c.i) +
                                    "," + std::to_string(c.j) + ")");
    }
    std::sort(cells.begin(), cells.end(), [](const Triplet& a, const Triplet& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t t = 1; t < cells.size(); ++t) {
      if (cells[t].i == cells[t - 1].i && cells[t].j == cells[t - 1].j)
        throw std::invalid_argument("ObservationSet: duplicate cell (" + std::to_string(cells[t].i) +
                                    "," + std::to_string(cells[t].j) + ")");
    }

    ObservationSet o;
    o.N_ = N;
    o.J_ = J;
    const std::size_t n = cells.size();
    o.row_ptr_.assign(static_cast<std::size_t>(N) + 1, 0);
    o.col_ptr_.assign(static_cast<std::size_t>(J) + 1, 0);
    o.row_idx_.resize(n);
    o.row_val_.resize(n);
    o.col_idx_.resize(n);
    o.col_val_.resize(n);

    for (const auto& c : cells) {
      ++o.row_ptr_[static_cast<std::size_t>(c.i) + 1];
      ++o.col_ptr_[static_cast<std::size_t>(c.j) + 1];
    }
    for (int i = 0; i < N; ++i) o.row_ptr_[i + 1] += o.row_ptr_[i];
    for (int j = 0; j < J; ++j) o.col_ptr_[j + 1] += o.col_ptr_[j];

    // cells are (i,j)-sorted, so the row store fills in order
    for (std::size_t t = 0; t < n; ++t) {
      o.row_idx_[t] = cells[t].j;
      o.row_val_[t] = cells[t].y;
    }
    std::vector<int> fill(o.col_ptr_.begin(), o.col_ptr_.end() - 1);
    for (const auto& c : cells) {
      const int at = fill[c.j]++;
      o.col_idx_[at] = c.i;
      o.col_val_[at] = c.y;
    }
    return o;
  }

  // NaN marks a missing cell.
  static ObservationSet from_dense(const Eigen::MatrixXd& Y) {
    std::vector<Triplet> cells;
    cells.reserve(static_cast<std::size_t>(Y.size()));
    for (int i = 0; i < Y.rows(); ++i)
      for (int j = 0; j < Y.cols(); ++j)
        if (!std::isnan(Y(i, j))) cells.push_back({i, j, Y(i, j)});
    return from_triplets(static_cast<int>(Y.rows()), static_cast<int>(Y.cols()), std::move(cells));
  }

  int rows() const { return N_; }
  int cols() const { return J_; }
  long long n() const { return static_cast<long long>(row_idx_.size()); }

  CellsView row(int i) const {
    const std::size_t a = row_ptr_[i], b = row_ptr_[i + 1];
    return {std::span(row_idx_).subspan(a, b - a), std::span(row_val_).subspan(a, b - a)};
  }

  CellsView col(int j) const {
    const std::size_t a = col_ptr_[j], b = col_ptr_[j + 1];
    return {std::span(col_idx_).subspan(a, b - a), std::span(col_val_).subspan(a, b - a)};
  }

  std::vector<Triplet> to_triplets() const {
    std::vector<Triplet> out;
    out.reserve(row_idx_.size());
    for (int i = 0; i < N_; ++i) {
      const auto r = row(i);
      for (std::size_t t = 0; t < r.size(); ++t) out.push_back({i, r.idx[t], r.y[t]});
    }
    return out;
  }

  // Checks every stored value against the family's support.
  void validate_for(const Family& fam) const {
    for (int i = 0; i < N_; ++i) {
      const auto r = row(i);
      for (std::size_t t = 0; t < r.size(); ++t) {
        if (!fam.valid_y(r.y[t]))
          throw std::domain_error(std::string("ObservationSet: value ") + std::to_string(r.y[t]) +
                                  " at (" + std::to_string(i) + "," + std::to_string(r.idx[t]) +
                                  ") invalid for " + fam.name() + " family");
      }
    }
  }

 private:
  int N_ = 0, J_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> row_idx_;
  std::vector<double> row_val_;
  std::vector<std::size_t> col_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> col_val_;
};

}  // namespace glfa
