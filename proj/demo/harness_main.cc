// Evaluation harness for the matmul demo. Four correctness gates, then a
// timed section whose total over 10 multiplications becomes the SCORE line.
//
// Built by harness.sh with -DCANDIDATE_PATH=\"<workdir>/simplematrix.cc\" so
// the candidate (not the pristine copy next to this file) is compiled in.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include CANDIDATE_PATH

namespace {

using value_type = SimpleMatrix::value_type;

SimpleMatrix filled(int rows, int cols, unsigned seed) {
    SimpleMatrix m(rows, cols);
    unsigned state = seed;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            state = state * 1664525u + 1013904223u;
            m(i, j) = static_cast<value_type>(state % 2048) / 1024.0L - 1.0L;
        }
    }
    return m;
}

SimpleMatrix reference_multiply(const SimpleMatrix& lhs, const SimpleMatrix& rhs) {
    SimpleMatrix res(lhs.rows(), rhs.columns());
    for (int i = 0; i < lhs.rows(); ++i) {
        for (int j = 0; j < rhs.columns(); ++j) {
            value_type acc = 0;
            for (int k = 0; k < lhs.columns(); ++k) acc += lhs(i, k) * rhs(k, j);
            res(i, j) = acc;
        }
    }
    return res;
}

bool nearly_equal(const SimpleMatrix& a, const SimpleMatrix& b) {
    if (a.rows() != b.rows() || a.columns() != b.columns()) return false;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.columns(); ++j) {
            value_type x = a(i, j);
            value_type y = b(i, j);
            value_type scale = std::fabs(x) > 1.0L ? std::fabs(x) : 1.0L;
            if (std::fabs(x - y) > 1e-12L * scale) return false;
        }
    }
    return true;
}

bool check_correctness(int rows, int inner, int cols, unsigned seed) {
    SimpleMatrix a = filled(rows, inner, seed);
    SimpleMatrix b = filled(inner, cols, seed + 7);
    return nearly_equal(a * b, reference_multiply(a, b));
}

// 1 + 1e-18 is representable in long double but collapses to 1 in double; a
// candidate that narrows the element or accumulator type loses the tail.
bool check_datatype_width() {
    SimpleMatrix a(1, 2);
    SimpleMatrix b(2, 1);
    a(0, 0) = 1.0L;
    a(0, 1) = 1e-18L;
    b(0, 0) = 1.0L;
    b(1, 0) = 1.0L;
    SimpleMatrix c = a * b;
    return c(0, 0) > 1.0L;
}

bool check_shape_mismatch_throws() {
    SimpleMatrix a(3, 5);
    SimpleMatrix b(4, 7);
    try {
        SimpleMatrix c = a * b;
        (void)c;
    } catch (...) {
        return true;
    }
    return false;
}

}  // namespace

int main() {
    if (!check_correctness(101, 103, 107, 12345u)) {
        std::puts("result mismatch against reference multiplication (prime dimensions)");
        return 1;
    }
    if (!check_datatype_width()) {
        std::puts("datatype too short; use SimpleMatrix::value_type");
        return 1;
    }
    if (!check_shape_mismatch_throws()) {
        std::puts("mismatched shapes must throw");
        return 1;
    }
    if (!check_correctness(64, 96, 80, 777u)) {
        std::puts("result mismatch against reference multiplication (general case)");
        return 1;
    }

    const int n = 160;
    SimpleMatrix a = filled(n, n, 42u);
    SimpleMatrix b = filled(n, n, 43u);
    value_type sink = 0;
    auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 10; ++rep) {
        SimpleMatrix c = a * b;
        sink += c(rep % n, rep % n);
    }
    auto elapsed = std::chrono::steady_clock::now() - start;
    long long ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    if (sink == 12345.0L) std::puts("(unlikely)");  // keep the timed work alive
    std::puts("all checks passed");
    std::printf("SCORE: %lld\n", ms);
    return 0;
}
