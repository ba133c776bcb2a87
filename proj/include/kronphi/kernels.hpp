// Dense column-major matrix kernels: a packed, register-blocked, OpenMP
// parallel GEMM, a batched variant with a shared right-hand operand for the
// slab sweeps of interior mode products, and a naive serial reference kept
// for testing and for the kernel benchmark. Every mode product, Tucker
// operator and matrix function in this library bottoms out here.
//
// Determinism: the k dimension is processed in sequential KC slices and each
// C tile is owned by exactly one task, so results are bitwise independent of
// the thread count.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

#if defined(__GNUC__) || defined(__clang__)
#define KRONPHI_RESTRICT __restrict__
#else
#define KRONPHI_RESTRICT
#endif

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace kronphi {

namespace detail {
#if defined(__GLIBC__)
// Keep multi-megabyte tensor buffers on the heap free lists instead of
// round-tripping them through mmap; the integrator loops allocate and free
// such buffers every step and the page faults otherwise dominate small runs.
inline const bool malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 512 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  return true;
}();
#endif
}  // namespace detail

// Operation applied to the B operand. A is never transposed: the mode
// product layouts only ever need C = A*B and C = A*B^T.
enum class Op { none, transpose };

// Serial reference: C = alpha*A*op(B) + beta*C. Unblocked, obviously
// correct; used by tests and as the benchmark baseline.
template <typename T>
void gemm_naive(int m, int n, int k, T alpha, const T* a, int lda,
                const T* b, int ldb, Op opb, T beta, T* c, int ldc) {
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      T acc{};
      if (opb == Op::none) {
        for (int p = 0; p < k; ++p)
          acc += a[i + std::size_t(p) * lda] * b[p + std::size_t(j) * ldb];
      } else {
        for (int p = 0; p < k; ++p)
          acc += a[i + std::size_t(p) * lda] * b[j + std::size_t(p) * ldb];
      }
      T& cij = c[i + std::size_t(j) * ldc];
      cij = (beta == T{}) ? alpha * acc : alpha * acc + beta * cij;
    }
  }
}

// Allocator that default-initializes (i.e. leaves scalars uninitialized) so
// buffers that are fully overwritten skip the zero fill.
template <typename T, typename A = std::allocator<T>>
class default_init_allocator : public A {
  using traits = std::allocator_traits<A>;

 public:
  template <typename U>
  struct rebind {
    using other =
        default_init_allocator<U, typename traits::template rebind_alloc<U>>;
  };
  using A::A;
  template <typename U>
  void construct(U* ptr) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(ptr)) U;
  }
  template <typename U, typename... Args>
  void construct(U* ptr, Args&&... args) {
    traits::construct(static_cast<A&>(*this), ptr, std::forward<Args>(args)...);
  }
};

namespace detail {

// Register tile. 6x8 doubles keeps the accumulator block plus one row of B
// within the 16 ymm registers of AVX2; the j loop vectorizes cleanly.
inline constexpr int kMR = 6;
inline constexpr int kNR = 8;
inline constexpr int kKC = 256;

template <typename T>
struct GemmScratch {
  std::vector<T, default_init_allocator<T>> ap, bp;
};

template <typename T>
GemmScratch<T>& gemm_scratch() {
  static thread_local GemmScratch<T> s;
  return s;
}

// One MR-row micro-panel of A (rows i0..i0+MR of the kc columns starting at
// `a`), zero padded on the ragged edge.
template <typename T>
inline void pack_a_tile(int m, int kc, const T* KRONPHI_RESTRICT a,
                        std::size_t lda, int ir, T* KRONPHI_RESTRICT dst) {
  const int i0 = ir * kMR;
  const T* KRONPHI_RESTRICT src = a + i0;
  if (i0 + kMR <= m) {
    for (int p = 0; p < kc; ++p)
      std::memcpy(dst + std::size_t(p) * kMR, src + std::size_t(p) * lda,
                  kMR * sizeof(T));
    return;
  }
  const int ilim = m - i0;
  for (int p = 0; p < kc; ++p) {
    const T* col = src + std::size_t(p) * lda;
    int r = 0;
    for (; r < ilim; ++r) dst[p * kMR + r] = col[r];
    for (; r < kMR; ++r) dst[p * kMR + r] = T{};
  }
}

// One NR-column micro-panel of B; for Op::transpose the stored matrix is
// n x k and is read transposed.
template <typename T>
inline void pack_b_tile(int n, int kc, const T* KRONPHI_RESTRICT b,
                        std::size_t ldb, Op opb, int jr,
                        T* KRONPHI_RESTRICT dst) {
  const int j0 = jr * kNR;
  const int jlim = std::min(kNR, n - j0);
  if (opb == Op::none) {
    if (jlim == kNR) {
      for (int p = 0; p < kc; ++p)
        for (int cc = 0; cc < kNR; ++cc)
          dst[p * kNR + cc] = b[p + std::size_t(j0 + cc) * ldb];
    } else {
      for (int p = 0; p < kc; ++p) {
        int cc = 0;
        for (; cc < jlim; ++cc) dst[p * kNR + cc] = b[p + std::size_t(j0 + cc) * ldb];
        for (; cc < kNR; ++cc) dst[p * kNR + cc] = T{};
      }
    }
  } else {
    if (jlim == kNR) {
      for (int p = 0; p < kc; ++p)
        std::memcpy(dst + std::size_t(p) * kNR, b + j0 + std::size_t(p) * ldb,
                    kNR * sizeof(T));
    } else {
      for (int p = 0; p < kc; ++p) {
        int cc = 0;
        for (; cc < jlim; ++cc) dst[p * kNR + cc] = b[(j0 + cc) + std::size_t(p) * ldb];
        for (; cc < kNR; ++cc) dst[p * kNR + cc] = T{};
      }
    }
  }
}

template <typename T>
inline void micro_kernel(int kc, const T* KRONPHI_RESTRICT ap,
                         const T* KRONPHI_RESTRICT bp,
                         T acc[kMR][kNR]) {
  for (int p = 0; p < kc; ++p) {
    const T* KRONPHI_RESTRICT arow = ap + p * kMR;
    const T* KRONPHI_RESTRICT brow = bp + p * kNR;
    for (int i = 0; i < kMR; ++i) {
      const T av = arow[i];
      for (int j = 0; j < kNR; ++j) acc[i][j] += av * brow[j];
    }
  }
}

#if defined(__AVX2__) && defined(__FMA__)
// 6x8 FMA micro-kernel: 12 ymm accumulators, two B loads and six A
// broadcasts per k step.
inline void micro_kernel(int kc, const double* KRONPHI_RESTRICT ap,
                         const double* KRONPHI_RESTRICT bp,
                         double acc[kMR][kNR]) {
  __m256d c0a = _mm256_setzero_pd(), c0b = _mm256_setzero_pd();
  __m256d c1a = _mm256_setzero_pd(), c1b = _mm256_setzero_pd();
  __m256d c2a = _mm256_setzero_pd(), c2b = _mm256_setzero_pd();
  __m256d c3a = _mm256_setzero_pd(), c3b = _mm256_setzero_pd();
  __m256d c4a = _mm256_setzero_pd(), c4b = _mm256_setzero_pd();
  __m256d c5a = _mm256_setzero_pd(), c5b = _mm256_setzero_pd();
  for (int p = 0; p < kc; ++p) {
    const double* KRONPHI_RESTRICT a = ap + p * kMR;
    const __m256d b0 = _mm256_loadu_pd(bp + p * kNR);
    const __m256d b1 = _mm256_loadu_pd(bp + p * kNR + 4);
    __m256d av;
    av = _mm256_broadcast_sd(a + 0);
    c0a = _mm256_fmadd_pd(av, b0, c0a);
    c0b = _mm256_fmadd_pd(av, b1, c0b);
    av = _mm256_broadcast_sd(a + 1);
    c1a = _mm256_fmadd_pd(av, b0, c1a);
    c1b = _mm256_fmadd_pd(av, b1, c1b);
    av = _mm256_broadcast_sd(a + 2);
    c2a = _mm256_fmadd_pd(av, b0, c2a);
    c2b = _mm256_fmadd_pd(av, b1, c2b);
    av = _mm256_broadcast_sd(a + 3);
    c3a = _mm256_fmadd_pd(av, b0, c3a);
    c3b = _mm256_fmadd_pd(av, b1, c3b);
    av = _mm256_broadcast_sd(a + 4);
    c4a = _mm256_fmadd_pd(av, b0, c4a);
    c4b = _mm256_fmadd_pd(av, b1, c4b);
    av = _mm256_broadcast_sd(a + 5);
    c5a = _mm256_fmadd_pd(av, b0, c5a);
    c5b = _mm256_fmadd_pd(av, b1, c5b);
  }
  _mm256_storeu_pd(acc[0], c0a);
  _mm256_storeu_pd(acc[0] + 4, c0b);
  _mm256_storeu_pd(acc[1], c1a);
  _mm256_storeu_pd(acc[1] + 4, c1b);
  _mm256_storeu_pd(acc[2], c2a);
  _mm256_storeu_pd(acc[2] + 4, c2b);
  _mm256_storeu_pd(acc[3], c3a);
  _mm256_storeu_pd(acc[3] + 4, c3b);
  _mm256_storeu_pd(acc[4], c4a);
  _mm256_storeu_pd(acc[4] + 4, c4b);
  _mm256_storeu_pd(acc[5], c5a);
  _mm256_storeu_pd(acc[5] + 4, c5b);
}
#endif

// Run the micro-kernel on tile (ir, jr) and fold the result into C with the
// alpha/beta convention of the enclosing kc block.
template <typename T>
inline void compute_tile(int m, int n, int kc, T alpha, const T* ap,
                         const T* bp, bool first, T beta, T* c, int ldc,
                         int jr, int ir) {
  T acc[kMR][kNR] = {};
  micro_kernel(kc, ap + std::size_t(ir) * kMR * kc,
               bp + std::size_t(jr) * kNR * kc, acc);
  const int i0 = ir * kMR;
  const int j0 = jr * kNR;
  const int ilim = std::min(kMR, m - i0);
  const int jlim = std::min(kNR, n - j0);
  for (int j = 0; j < jlim; ++j) {
    T* KRONPHI_RESTRICT cj = c + i0 + std::size_t(j0 + j) * ldc;
    if (first) {
      if (beta == T{})
        for (int i = 0; i < ilim; ++i) cj[i] = alpha * acc[i][j];
      else
        for (int i = 0; i < ilim; ++i) cj[i] = alpha * acc[i][j] + beta * cj[i];
    } else {
      for (int i = 0; i < ilim; ++i) cj[i] += alpha * acc[i][j];
    }
  }
}

template <typename T>
void scale_only(int m, int n, T beta, T* c, int ldc) {
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      T& cij = c[i + std::size_t(j) * ldc];
      cij = (beta == T{}) ? T{} : beta * cij;
    }
}

}  // namespace detail

// Blocked GEMM: C = alpha*A*op(B) + beta*C, all matrices column-major.
// With `parallel = false` the same kernel runs single threaded with no
// OpenMP entry at all (used for many small independent calls).
template <typename T>
void gemm(int m, int n, int k, T alpha, const T* a, int lda, const T* b,
          int ldb, Op opb, T beta, T* c, int ldc, bool parallel = true) {
  using namespace detail;
  if (m <= 0 || n <= 0) return;
  if (k <= 0 || alpha == T{}) {
    scale_only(m, n, beta, c, ldc);
    return;
  }

  const int mtiles = (m + kMR - 1) / kMR;
  const int ntiles = (n + kNR - 1) / kNR;
  auto& scratch = gemm_scratch<T>();
  scratch.ap.resize(std::size_t(mtiles) * kMR * kKC);
  scratch.bp.resize(std::size_t(ntiles) * kNR * kKC);
  T* const ap = scratch.ap.data();
  T* const bp = scratch.bp.data();

  for (int kc0 = 0; kc0 < k; kc0 += kKC) {
    const int kc = std::min(kKC, k - kc0);
    const bool first = (kc0 == 0);
    const T* ablk = a + std::size_t(kc0) * lda;
    const T* bblk = (opb == Op::none) ? b + kc0 : b + std::size_t(kc0) * ldb;
    if (parallel) {
#pragma omp parallel
      {
#pragma omp for schedule(static) nowait
        for (int ir = 0; ir < mtiles; ++ir)
          pack_a_tile(m, kc, ablk, lda, ir, ap + std::size_t(ir) * kMR * kc);
#pragma omp for schedule(static)
        for (int jr = 0; jr < ntiles; ++jr)
          pack_b_tile(n, kc, bblk, ldb, opb, jr, bp + std::size_t(jr) * kNR * kc);
          // barrier: both packs complete before any tile runs
#pragma omp for collapse(2) schedule(static)
        for (int jr = 0; jr < ntiles; ++jr)
          for (int ir = 0; ir < mtiles; ++ir)
            compute_tile(m, n, kc, alpha, ap, bp, first, beta, c, ldc, jr, ir);
      }
    } else {
      for (int ir = 0; ir < mtiles; ++ir)
        pack_a_tile(m, kc, ablk, lda, ir, ap + std::size_t(ir) * kMR * kc);
      for (int jr = 0; jr < ntiles; ++jr)
        pack_b_tile(n, kc, bblk, ldb, opb, jr, bp + std::size_t(jr) * kNR * kc);
      for (int jr = 0; jr < ntiles; ++jr)
        for (int ir = 0; ir < mtiles; ++ir)
          compute_tile(m, n, kc, alpha, ap, bp, first, beta, c, ldc, jr, ir);
    }
  }
}

// Batched GEMM with one shared right operand: C_q = alpha*A_q*op(B) + beta*C_q
// for q = 0..batch-1, A_q and C_q at fixed strides. B is packed once and the
// whole batch is parallelized jointly; this is the interior-mode slab sweep.
template <typename T>
void gemm_batch_shared_b(int m, int n, int k, T alpha, const T* a, int lda,
                         std::size_t a_stride, const T* b, int ldb, Op opb,
                         T beta, T* c, int ldc, std::size_t c_stride,
                         int batch, bool parallel = true) {
  using namespace detail;
  if (batch <= 0 || m <= 0 || n <= 0) return;
  if (k <= 0 || alpha == T{}) {
    for (int q = 0; q < batch; ++q)
      scale_only(m, n, beta, c + std::size_t(q) * c_stride, ldc);
    return;
  }

  const int mtiles = (m + kMR - 1) / kMR;
  const int ntiles = (n + kNR - 1) / kNR;
  auto& scratch = gemm_scratch<T>();
  scratch.ap.resize(std::size_t(batch) * mtiles * kMR * kKC);
  scratch.bp.resize(std::size_t(ntiles) * kNR * kKC);
  T* const ap = scratch.ap.data();
  T* const bp = scratch.bp.data();
  const std::size_t ap_stride = std::size_t(mtiles) * kMR;

  for (int kc0 = 0; kc0 < k; kc0 += kKC) {
    const int kc = std::min(kKC, k - kc0);
    const bool first = (kc0 == 0);
    const T* bblk = (opb == Op::none) ? b + kc0 : b + std::size_t(kc0) * ldb;
    if (parallel) {
#pragma omp parallel
      {
#pragma omp for schedule(static) nowait
        for (int jr = 0; jr < ntiles; ++jr)
          pack_b_tile(n, kc, bblk, ldb, opb, jr, bp + std::size_t(jr) * kNR * kc);
#pragma omp for collapse(2) schedule(static)
        for (int q = 0; q < batch; ++q)
          for (int ir = 0; ir < mtiles; ++ir)
            pack_a_tile(m, kc, a + std::size_t(q) * a_stride + std::size_t(kc0) * lda,
                        lda, ir, ap + (std::size_t(q) * ap_stride + std::size_t(ir) * kMR) * kc);
#pragma omp for collapse(2) schedule(static)
        for (int q = 0; q < batch; ++q)
          for (int jr = 0; jr < ntiles; ++jr)
            for (int ir = 0; ir < mtiles; ++ir)
              compute_tile(m, n, kc, alpha, ap + std::size_t(q) * ap_stride * kc,
                           bp, first, beta, c + std::size_t(q) * c_stride, ldc,
                           jr, ir);
      }
    } else {
      for (int jr = 0; jr < ntiles; ++jr)
        pack_b_tile(n, kc, bblk, ldb, opb, jr, bp + std::size_t(jr) * kNR * kc);
      for (int q = 0; q < batch; ++q)
        for (int ir = 0; ir < mtiles; ++ir)
          pack_a_tile(m, kc, a + std::size_t(q) * a_stride + std::size_t(kc0) * lda,
                      lda, ir, ap + (std::size_t(q) * ap_stride + std::size_t(ir) * kMR) * kc);
      for (int q = 0; q < batch; ++q)
        for (int jr = 0; jr < ntiles; ++jr)
          for (int ir = 0; ir < mtiles; ++ir)
            compute_tile(m, n, kc, alpha, ap + std::size_t(q) * ap_stride * kc,
                         bp, first, beta, c + std::size_t(q) * c_stride, ldc,
                         jr, ir);
    }
  }
}

}  // namespace kronphi
