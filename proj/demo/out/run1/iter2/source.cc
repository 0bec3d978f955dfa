// Naive matrix multiplication demo target. The harness rebuilds this file on
// every evaluation; keep it self-contained.
#include <cstddef>
#include <stdexcept>
#include <vector>

struct SimpleMatrix {
    using value_type = long double;  // element type; the harness checks its width

    SimpleMatrix(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

    value_type operator()(int row, int col) const {
        return data_[static_cast<std::size_t>(row) * cols_ + col];
    }
    value_type& operator()(int row, int col) {
        return data_[static_cast<std::size_t>(row) * cols_ + col];
    }

    int rows() const { return rows_; }
    int columns() const { return cols_; }

private:
    int rows_;
    int cols_;
    std::vector<value_type> data_;
};

// OPT-BEGIN
SimpleMatrix
operator*(const SimpleMatrix& lhs,
          const SimpleMatrix& rhs) {
  if (lhs.columns() != rhs.rows())
    throw std::runtime_error{"lhs.columns() != rhs.rows()"};

  SimpleMatrix res{lhs.rows(), rhs.columns()};

  using value_type = SimpleMatrix::value_type;
  const int rows = res.rows();
  const int cols = res.columns();
  const int inner = lhs.columns();

  const int ib = rows - rows % 2;
  const int jb = cols - cols % 2;

  // 2x2 register tile: four accumulators per block, each lhs/rhs load feeds
  // two multiplies. Remainder rows and columns fall through to scalar loops.
  for (int i = 0; i < ib; i += 2) {
    for (int j = 0; j < jb; j += 2) {
      value_type acc00 = 0, acc01 = 0, acc10 = 0, acc11 = 0;
      for (int k = 0; k < inner; ++k) {
        const value_type a0 = lhs(i, k);
        const value_type a1 = lhs(i + 1, k);
        const value_type b0 = rhs(k, j);
        const value_type b1 = rhs(k, j + 1);
        acc00 += a0 * b0;
        acc01 += a0 * b1;
        acc10 += a1 * b0;
        acc11 += a1 * b1;
      }
      res(i, j) = acc00;
      res(i, j + 1) = acc01;
      res(i + 1, j) = acc10;
      res(i + 1, j + 1) = acc11;
    }
    for (int j = jb; j < cols; ++j) {
      value_type acc0 = 0, acc1 = 0;
      for (int k = 0; k < inner; ++k) {
        acc0 += lhs(i, k) * rhs(k, j);
        acc1 += lhs(i + 1, k) * rhs(k, j);
      }
      res(i, j) = acc0;
      res(i + 1, j) = acc1;
    }
  }
  for (int i = ib; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      value_type acc = 0;
      for (int k = 0; k < inner; ++k) acc += lhs(i, k) * rhs(k, j);
      res(i, j) = acc;
    }
  }
  return res;
}
// OPT-END
