#pragma once

// Matrix-multiply core for the network engine. One GEMM primitive
// (row-major C = A*B) built on a register-tiled microkernel, plus the
// im2col/col2im companions that turn valid-padding convolution into GEMM.
//
// Determinism contract: C[m][n] is always the plain left-to-right sum
// A[m][0]*B[0][n] + A[m][1]*B[1][n] + ... computed by exactly one thread.
// Vector lanes only spread independent output elements, never a reduction,
// so results are bit-identical for any thread count and match a scalar
// triple loop written in the same k order (given one floating-point
// contraction mode across the build).

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <thread>
#include <vector>

namespace wildfire {

inline int& detail_thread_count() {
  static int n = 1;
  return n;
}

// Worker threads for GEMM/convolution row blocks. Results do not depend on
// this value; it only changes wall time.
inline void set_thread_count(int n) { detail_thread_count() = std::max(1, n); }
inline int thread_count() { return detail_thread_count(); }

template <typename Fn>
void parallel_for(size_t total, Fn&& fn) {
  size_t workers = std::min<size_t>(static_cast<size_t>(thread_count()), total);
  if (workers <= 1) {
    if (total > 0) fn(size_t(0), total);
    return;
  }
  size_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    size_t begin = w * chunk;
    size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

namespace gemm_detail {

#if defined(__GNUC__) || defined(__clang__)
typedef float vf __attribute__((vector_size(64), aligned(4)));
typedef double vd __attribute__((vector_size(64), aligned(8)));
template <typename T> struct vec_of;
template <> struct vec_of<float> { using type = vf; static constexpr int lanes = 16; };
template <> struct vec_of<double> { using type = vd; static constexpr int lanes = 8; };
#define WILDFIRE_GEMM_VECTOR 1
#endif

#ifdef WILDFIRE_GEMM_VECTOR

// 4 x (4*lanes) block with named accumulators; K is the sequential loop.
template <typename T>
inline void kernel4x4(const T* __restrict a, const T* __restrict b, T* __restrict c,
                      int K, size_t lda, size_t ldb, size_t ldc) {
  using V = typename vec_of<T>::type;
  constexpr int L = vec_of<T>::lanes;
  V c00{}, c01{}, c02{}, c03{};
  V c10{}, c11{}, c12{}, c13{};
  V c20{}, c21{}, c22{}, c23{};
  V c30{}, c31{}, c32{}, c33{};
  const T* a0 = a;
  const T* a1 = a + lda;
  const T* a2 = a + 2 * lda;
  const T* a3 = a + 3 * lda;
  for (int k = 0; k < K; ++k) {
    const T* br = b + static_cast<size_t>(k) * ldb;
    V b0, b1, b2, b3;
    std::memcpy(&b0, br, sizeof(V));
    std::memcpy(&b1, br + L, sizeof(V));
    std::memcpy(&b2, br + 2 * L, sizeof(V));
    std::memcpy(&b3, br + 3 * L, sizeof(V));
    V s0 = V{} + a0[k], s1 = V{} + a1[k], s2 = V{} + a2[k], s3 = V{} + a3[k];
    c00 += s0 * b0; c01 += s0 * b1; c02 += s0 * b2; c03 += s0 * b3;
    c10 += s1 * b0; c11 += s1 * b1; c12 += s1 * b2; c13 += s1 * b3;
    c20 += s2 * b0; c21 += s2 * b1; c22 += s2 * b2; c23 += s2 * b3;
    c30 += s3 * b0; c31 += s3 * b1; c32 += s3 * b2; c33 += s3 * b3;
  }
  const V out[4][4] = {{c00, c01, c02, c03},
                       {c10, c11, c12, c13},
                       {c20, c21, c22, c23},
                       {c30, c31, c32, c33}};
  for (int i = 0; i < 4; ++i)
    for (int v = 0; v < 4; ++v)
      std::memcpy(c + i * ldc + v * L, &out[i][v], sizeof(V));
}

#endif  // WILDFIRE_GEMM_VECTOR

template <typename T>
inline void rows_scalar(const T* A, const T* B, T* C, int K, int N, size_t lda,
                        size_t ldb, size_t ldc, int rows, int n0, int n1) {
  for (int i = 0; i < rows; ++i) {
    for (int n = n0; n < n1; ++n) {
      T acc = T(0);
      const T* a = A + i * lda;
      for (int k = 0; k < K; ++k) acc += a[k] * B[static_cast<size_t>(k) * ldb + n];
      C[i * ldc + n] = acc;
    }
  }
}

}  // namespace gemm_detail

// C[M x N] = A[M x K] * B[K x N], all row-major, C overwritten.
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int M, int K, int N) {
  using namespace gemm_detail;
#ifdef WILDFIRE_GEMM_VECTOR
  constexpr int L = vec_of<T>::lanes;
  constexpr int NR = 4 * L;
  constexpr int MR = 4;
  int n_main = (N / NR) * NR;
  size_t blocks = static_cast<size_t>((M + MR - 1) / MR);
  parallel_for(blocks, [&](size_t b0, size_t b1) {
    for (size_t blk = b0; blk < b1; ++blk) {
      int m = static_cast<int>(blk) * MR;
      int rows = std::min(MR, M - m);
      const T* a = A + static_cast<size_t>(m) * K;
      T* c = C + static_cast<size_t>(m) * N;
      if (rows == MR) {
        for (int n = 0; n < n_main; n += NR)
          kernel4x4<T>(a, B + n, c + n, K, K, N, N);
        if (n_main < N) rows_scalar<T>(a, B, c, K, N, K, N, N, rows, n_main, N);
      } else {
        rows_scalar<T>(a, B, c, K, N, K, N, N, rows, 0, N);
      }
    }
  });
#else
  parallel_for(static_cast<size_t>(M), [&](size_t m0, size_t m1) {
    gemm_detail::rows_scalar<T>(A + m0 * K, B, C + m0 * N, K, N, K, N, N,
                                static_cast<int>(m1 - m0), 0, N);
  });
#endif
}

// Cache-blocked transpose: out[K x M] from in[M x K].
template <typename T>
void transpose(const T* in, T* out, int M, int K) {
  constexpr int B = 32;
  parallel_for(static_cast<size_t>((M + B - 1) / B), [&](size_t b0, size_t b1) {
    for (size_t blk = b0; blk < b1; ++blk) {
      int m0 = static_cast<int>(blk) * B;
      int m1 = std::min(M, m0 + B);
      for (int k0 = 0; k0 < K; k0 += B) {
        int k1 = std::min(K, k0 + B);
        for (int m = m0; m < m1; ++m)
          for (int k = k0; k < k1; ++k)
            out[static_cast<size_t>(k) * M + m] = in[static_cast<size_t>(m) * K + k];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// im2col / col2im for valid padding, stride 1, HWC layout.
//
// Column index k corresponds to (a, b, c) = (kernel row, kernel col,
// input channel) with c fastest, matching a scalar loop written
// for a / for b / for c. Row index m = ((sample * oh) + i) * ow + j.

struct ConvShape {
  int in_h, in_w, in_c, kh, kw, out_c;
  int out_h() const { return in_h - kh + 1; }
  int out_w() const { return in_w - kw + 1; }
  int k() const { return kh * kw * in_c; }
};

template <typename T>
void im2col(const T* input, T* col, const ConvShape& s, int count) {
  int oh = s.out_h(), ow = s.out_w();
  size_t row_len = static_cast<size_t>(s.k());
  size_t per_sample = static_cast<size_t>(s.in_h) * s.in_w * s.in_c;
  parallel_for(static_cast<size_t>(count) * oh, [&](size_t r0, size_t r1) {
    for (size_t r = r0; r < r1; ++r) {
      int sample = static_cast<int>(r / oh);
      int i = static_cast<int>(r % oh);
      const T* in = input + sample * per_sample;
      for (int j = 0; j < ow; ++j) {
        T* dst = col + (r * ow + j) * row_len;
        for (int a = 0; a < s.kh; ++a) {
          const T* src = in + ((static_cast<size_t>(i + a) * s.in_w) + j) * s.in_c;
          std::memcpy(dst + static_cast<size_t>(a) * s.kw * s.in_c, src,
                      sizeof(T) * s.kw * s.in_c);
        }
      }
    }
  });
}

// Gather form of col2im: every input cell sums its dcol contributions in
// fixed (a, b) order, so the result is independent of threading.
template <typename T>
void col2im_gather(const T* dcol, T* dinput, const ConvShape& s, int count) {
  int oh = s.out_h(), ow = s.out_w();
  size_t row_len = static_cast<size_t>(s.k());
  size_t per_sample = static_cast<size_t>(s.in_h) * s.in_w * s.in_c;
  parallel_for(static_cast<size_t>(count) * s.in_h, [&](size_t r0, size_t r1) {
    for (size_t r = r0; r < r1; ++r) {
      int sample = static_cast<int>(r / s.in_h);
      int y = static_cast<int>(r % s.in_h);
      const T* dc = dcol + static_cast<size_t>(sample) * oh * ow * row_len;
      T* out = dinput + sample * per_sample + static_cast<size_t>(y) * s.in_w * s.in_c;
      for (int x = 0; x < s.in_w; ++x) {
        for (int c = 0; c < s.in_c; ++c) {
          T acc = T(0);
          int a_lo = std::max(0, y - (oh - 1));
          int a_hi = std::min(s.kh - 1, y);
          for (int a = a_lo; a <= a_hi; ++a) {
            int i = y - a;
            int b_lo = std::max(0, x - (ow - 1));
            int b_hi = std::min(s.kw - 1, x);
            for (int bb = b_lo; bb <= b_hi; ++bb) {
              int j = x - bb;
              acc += dc[(static_cast<size_t>(i) * ow + j) * row_len +
                        (static_cast<size_t>(a) * s.kw + bb) * s.in_c + c];
            }
          }
          out[static_cast<size_t>(x) * s.in_c + c] = acc;
        }
      }
    }
  });
}

}  // namespace wildfire
