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

  const int rows = res.rows();
  const int cols = res.columns();
  const int inner = lhs.columns();

  // i-k-j order: the inner loop is unit-stride over rhs and res, and res is
  // zero-initialized so accumulating in place is safe.
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < inner; ++k) {
      const SimpleMatrix::value_type a = lhs(i, k);
      for (int j = 0; j < cols; ++j)
        res(i, j) += a * rhs(k, j);
    }
  }
  return res;
}
// OPT-END
