#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace czt {

namespace detail {

// FFTW plans cached per transform length. Planning is not thread safe, so it
// is serialized; execution through the new-array interface is safe to call
// concurrently. Plans are created with FFTW_UNALIGNED so they can run on any
// caller buffer.
class DctPlans {
 public:
  static DctPlans& instance() {
    static DctPlans plans;
    return plans;
  }

  // Unnormalized DCT-II (FFTW REDFT10), out-of-place.
  void forward(const double* in, double* out, int n) {
    fftw_execute_r2r(plan(n, FFTW_REDFT10), const_cast<double*>(in), out);
  }

  // Unnormalized DCT-III (FFTW REDFT01), out-of-place.
  void inverse(const double* in, double* out, int n) {
    fftw_execute_r2r(plan(n, FFTW_REDFT01), const_cast<double*>(in), out);
  }

 private:
  DctPlans() = default;

  fftw_plan plan(int n, fftw_r2r_kind kind) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, static_cast<int>(kind));
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_r2r_1d(n, a.data(), b.data(), kind, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline std::vector<double>& scratch_buffer(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace detail

// Forward orthonormal DCT-II. With 0-based sample index i (= 1-based i+1):
//   alpha[j] = K(j) * sum_i x[i] * cos(pi * j * (i + 0.5) / N)
//   K(0) = 1/sqrt(N), K(j) = sqrt(2/N) for j >= 1.
// The inverse is the transpose of this map. `in` and `out` must not alias.
inline void dct_forward_into(const double* in, double* out, int n) {
  if (n <= 0) throw std::invalid_argument("empty block");
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  detail::DctPlans::instance().forward(in, out, n);
  const double s0 = 0.5 / std::sqrt(static_cast<double>(n));
  const double s = 1.0 / std::sqrt(2.0 * n);
  out[0] *= s0;
  for (int j = 1; j < n; ++j) out[j] *= s;
}

inline void idct_into(const double* in, double* out, int n) {
  if (n <= 0) throw std::invalid_argument("empty block");
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  auto& scratch = detail::scratch_buffer(static_cast<std::size_t>(n));
  const double s0 = 1.0 / std::sqrt(static_cast<double>(n));
  const double s = 1.0 / std::sqrt(2.0 * n);
  scratch[0] = in[0] * s0;
  for (int j = 1; j < n; ++j) scratch[j] = in[j] * s;
  detail::DctPlans::instance().inverse(scratch.data(), out, n);
}

inline std::vector<double> dct_forward(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("empty block");
  std::vector<double> out(x.size());
  dct_forward_into(x.data(), out.data(), static_cast<int>(x.size()));
  return out;
}

inline std::vector<double> idct(const std::vector<double>& alpha) {
  if (alpha.empty()) throw std::invalid_argument("empty block");
  std::vector<double> out(alpha.size());
  idct_into(alpha.data(), out.data(), static_cast<int>(alpha.size()));
  return out;
}

// O(N^2) evaluation of the same formulas. This is the reference the fast path
// is tested against.
inline std::vector<double> dct_forward_direct(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw std::invalid_argument("empty block");
  std::vector<double> out(x.size());
  const double pi = 3.14159265358979323846;
  for (int j = 0; j < n; ++j) {
    const double k = (j == 0) ? 1.0 / std::sqrt(static_cast<double>(n)) : std::sqrt(2.0 / n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += x[i] * std::cos(pi * j * (i + 0.5) / n);
    out[j] = k * acc;
  }
  return out;
}

inline std::vector<double> idct_direct(const std::vector<double>& alpha) {
  const int n = static_cast<int>(alpha.size());
  if (n == 0) throw std::invalid_argument("empty block");
  std::vector<double> out(alpha.size());
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double k = (j == 0) ? 1.0 / std::sqrt(static_cast<double>(n)) : std::sqrt(2.0 / n);
      acc += k * alpha[j] * std::cos(pi * j * (i + 0.5) / n);
    }
    out[i] = acc;
  }
  return out;
}

// Row-major N x N inverse-transform matrix: column j holds the j-th basis
// vector, so x = Psi * alpha.
inline std::vector<double> idct_matrix(int n) {
  if (n <= 0) throw std::invalid_argument("empty block");
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k = (j == 0) ? 1.0 / std::sqrt(static_cast<double>(n)) : std::sqrt(2.0 / n);
      m[static_cast<std::size_t>(i) * n + j] = k * std::cos(pi * j * (i + 0.5) / n);
    }
  }
  return m;
}

// Keeps the K largest-magnitude entries and zeroes the rest. Ties are broken
// in favor of the lower index.
inline std::vector<double> hard_threshold(const std::vector<double>& alpha, int k) {
  const int n = static_cast<int>(alpha.size());
  if (n == 0) throw std::invalid_argument("empty block");
  if (k < 1 || k > n) throw std::invalid_argument("sparsity out of range");
  if (k == n) return alpha;
  std::vector<int> order(alpha.size());
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), [&](int a, int b) {
    const double ma = std::fabs(alpha[a]);
    const double mb = std::fabs(alpha[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  std::vector<double> out(alpha.size(), 0.0);
  for (int i = 0; i < k; ++i) out[order[i]] = alpha[order[i]];
  return out;
}

// Coherence of a square orthonormal matrix: sqrt(N) * max |u_ij|. The input
// is checked for orthonormality (Gram matrix within 1e-6 of identity).
inline double coherence(const std::vector<double>& u, int n) {
  if (n <= 0) throw std::invalid_argument("empty block");
  if (u.size() != static_cast<std::size_t>(n) * n) {
    throw std::invalid_argument("matrix size mismatch");
  }
  for (double v : u) {
    if (!std::isfinite(v)) throw std::runtime_error("not unitary");
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) {
        dot += u[static_cast<std::size_t>(i) * n + a] * u[static_cast<std::size_t>(i) * n + b];
      }
      const double expect = (a == b) ? 1.0 : 0.0;
      if (std::fabs(dot - expect) > 1e-6) throw std::runtime_error("not unitary");
    }
  }
  double max_abs = 0.0;
  for (double v : u) max_abs = std::max(max_abs, std::fabs(v));
  return std::sqrt(static_cast<double>(n)) * max_abs;
}

}  // namespace czt
