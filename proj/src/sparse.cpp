#include "nsmf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nsmf {

void TripletBatch::reserve(std::size_t entries, std::size_t rhs_entries) {
  rows.reserve(entries);
  cols.reserve(entries);
  vals.reserve(entries);
  rhs_index.reserve(rhs_entries);
  rhs_value.reserve(rhs_entries);
}

std::int64_t SparseCSR::find(std::int32_t i, std::int32_t j) const {
  const auto begin = col_idx.begin() + row_ptr[static_cast<std::size_t>(i)];
  const auto end = col_idx.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return it - col_idx.begin();
}

double SparseCSR::at(std::int32_t i, std::int32_t j) const {
  const std::int64_t k = find(i, j);
  return k < 0 ? 0.0 : vals[static_cast<std::size_t>(k)];
}

bool SparseCSR::same_pattern(const SparseCSR& other) const {
  return n == other.n && row_ptr == other.row_ptr && col_idx == other.col_idx;
}

void SparseCSR::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::int32_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      s += vals[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = s;
  }
}

double SparseCSR::norm_inf() const {
  double m = 0.0;
  for (std::int32_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      s += std::abs(vals[static_cast<std::size_t>(k)]);
    }
    m = std::max(m, s);
  }
  return m;
}

SparseCSR SparseCSR::identity(std::int32_t n) {
  SparseCSR a;
  a.n = n;
  a.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  std::iota(a.row_ptr.begin(), a.row_ptr.end(), 0);
  a.col_idx.resize(static_cast<std::size_t>(n));
  std::iota(a.col_idx.begin(), a.col_idx.end(), 0);
  a.vals.assign(static_cast<std::size_t>(n), 1.0);
  return a;
}

SparseCSR SparseCSR::from_dense(std::int32_t n, std::span<const double> dense) {
  SparseCSR a;
  a.n = n;
  a.row_ptr.assign(1, 0);
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t j = 0; j < n; ++j) {
      const double v = dense[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      if (v != 0.0) {
        a.col_idx.push_back(j);
        a.vals.push_back(v);
      }
    }
    a.row_ptr.push_back(static_cast<std::int64_t>(a.col_idx.size()));
  }
  return a;
}

std::vector<double> SparseCSR::to_dense() const {
  const auto nn = static_cast<std::size_t>(n);
  std::vector<double> d(nn * nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      d[i * nn + static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)])] += vals[static_cast<std::size_t>(k)];
    }
  }
  return d;
}

LinearSystem merge_triplets(std::span<const TripletBatch> batches, std::int32_t n_dofs) {
  const auto n = static_cast<std::size_t>(n_dofs);
  std::size_t total = 0;
  for (const auto& b : batches) {
    if (b.rows.size() != b.vals.size() || b.cols.size() != b.vals.size() || b.rhs_index.size() != b.rhs_value.size()) {
      throw std::invalid_argument("triplet batch arrays have unequal lengths");
    }
    total += b.size();
  }

  // Stable bucket by row, preserving (batch, emission) order.
  std::vector<std::int64_t> count(n + 1, 0);
  for (const auto& b : batches) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::int32_t r = b.rows[k], c = b.cols[k];
      if (r < 0 || r >= n_dofs || c < 0 || c >= n_dofs) {
        throw std::out_of_range("triplet (" + std::to_string(r) + "," + std::to_string(c) + ") outside order " +
                                std::to_string(n_dofs));
      }
      ++count[static_cast<std::size_t>(r) + 1];
    }
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<std::int32_t> bcol(total);
  std::vector<double> bval(total);
  {
    std::vector<std::int64_t> next(count.begin(), count.end() - 1);
    for (const auto& b : batches) {
      for (std::size_t k = 0; k < b.size(); ++k) {
        const auto pos = static_cast<std::size_t>(next[static_cast<std::size_t>(b.rows[k])]++);
        bcol[pos] = b.cols[k];
        bval[pos] = b.vals[k];
      }
    }
  }

  LinearSystem sys;
  SparseCSR& a = sys.matrix;
  a.n = n_dofs;
  a.row_ptr.assign(n + 1, 0);
  a.col_idx.reserve(total / 4 + 1);
  a.vals.reserve(total / 4 + 1);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = static_cast<std::size_t>(count[i]), hi = static_cast<std::size_t>(count[i + 1]);
    order.resize(hi - lo);
    std::iota(order.begin(), order.end(), lo);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return bcol[x] < bcol[y]; });
    for (std::size_t t = 0; t < order.size(); ++t) {
      const std::size_t k = order[t];
      if (t > 0 && bcol[k] == a.col_idx.back()) {
        a.vals.back() += bval[k];
      } else {
        a.col_idx.push_back(bcol[k]);
        a.vals.push_back(bval[k]);
      }
    }
    a.row_ptr[i + 1] = static_cast<std::int64_t>(a.col_idx.size());
  }

  sys.rhs.assign(n, 0.0);
  for (const auto& b : batches) {
    for (std::size_t k = 0; k < b.rhs_index.size(); ++k) {
      const std::int32_t r = b.rhs_index[k];
      if (r < 0 || r >= n_dofs) throw std::out_of_range("rhs index " + std::to_string(r) + " out of range");
      sys.rhs[static_cast<std::size_t>(r)] += b.rhs_value[k];
    }
  }
  return sys;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void write_matrix_market(const SparseCSR& a, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.n << ' ' << a.n << ' ' << a.nnz() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::int32_t i = 0; i < a.n; ++i) {
    for (auto k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      os << i + 1 << ' ' << a.col_idx[static_cast<std::size_t>(k)] + 1 << ' ' << a.vals[static_cast<std::size_t>(k)] << '\n';
    }
  }
}

namespace {

std::string next_data_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw std::runtime_error("unexpected end of Matrix Market stream");
}

}  // namespace

SparseCSR read_matrix_market(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket matrix coordinate real general", 0) != 0) {
    throw std::runtime_error("not a real general coordinate Matrix Market stream");
  }
  std::istringstream size_line(next_data_line(is));
  std::int64_t rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols >> nnz;
  if (rows != cols || rows < 0 || rows > std::numeric_limits<std::int32_t>::max()) throw std::runtime_error("matrix must be square");
  TripletBatch b;
  b.reserve(static_cast<std::size_t>(nnz), 0);
  for (std::int64_t k = 0; k < nnz; ++k) {
    std::istringstream ls(next_data_line(is));
    std::int64_t i = 0, j = 0;
    double v = 0.0;
    if (!(ls >> i >> j >> v)) throw std::runtime_error("malformed Matrix Market entry");
    b.rows.push_back(static_cast<std::int32_t>(i - 1));
    b.cols.push_back(static_cast<std::int32_t>(j - 1));
    b.vals.push_back(v);
  }
  return merge_triplets(std::span<const TripletBatch>(&b, 1), static_cast<std::int32_t>(rows)).matrix;
}

void write_vector_market(std::span<const double> v, std::ostream& os) {
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : v) os << x << '\n';
}

std::vector<double> read_vector_market(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket matrix array real general", 0) != 0) {
    throw std::runtime_error("not a real general array Matrix Market stream");
  }
  std::istringstream size_line(next_data_line(is));
  std::size_t rows = 0, cols = 0;
  size_line >> rows >> cols;
  if (cols != 1) throw std::runtime_error("expected a single column");
  std::vector<double> v(rows);
  for (auto& x : v) {
    std::istringstream ls(next_data_line(is));
    if (!(ls >> x)) throw std::runtime_error("malformed vector entry");
  }
  return v;
}

}  // namespace nsmf
