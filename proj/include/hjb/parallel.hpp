#pragma once

#include <cstdint>
#include <vector>

#include <omp.h>

// Thin dispatch layer between the OpenMP kernels and a plain serial loop.
// Every hot per-node loop in the library goes through here so that tests can
// pin the serial reference and compare it against the parallel path.
//
// Determinism contract: results are identical in both modes and for any
// thread count.  Loops write to disjoint slots, and reductions only use
// combiners that are associative, commutative and exact in floating point
// (max / argmax with index tie-break).  Summations are never reduced across
// threads.

namespace hjb::par {

enum class Mode { Serial, OpenMP };

inline Mode& mode() {
  static Mode m = Mode::OpenMP;
  return m;
}

template <class F>
inline void for_each(std::int64_t n, F&& body) {
  if (mode() == Mode::Serial) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

// Reduction with a user combiner.  `value_at(i)` produces the i-th item,
// `combine(acc, item)` folds it.  The combiner must be associative and
// commutative (exactly, not just up to rounding) for the result to be
// independent of the schedule; max-like combiners qualify.
template <class T, class V, class C>
inline T reduce(std::int64_t n, T init, V&& value_at, C&& combine) {
  if (mode() == Mode::Serial || n < 2) {
    T acc = init;
    for (std::int64_t i = 0; i < n; ++i) acc = combine(acc, value_at(i));
    return acc;
  }
  std::vector<T> partial;
#pragma omp parallel
  {
#pragma omp single
    partial.assign(static_cast<std::size_t>(omp_get_num_threads()), init);
    T acc = init;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) acc = combine(acc, value_at(i));
    partial[static_cast<std::size_t>(omp_get_thread_num())] = acc;
  }
  T acc = init;
  for (const T& p : partial) acc = combine(acc, p);
  return acc;
}

// Maximum of value_at(i); empty range gives `init`.
template <class V>
inline double max_reduce(std::int64_t n, double init, V&& value_at) {
  return reduce(n, init, value_at,
                [](double a, double b) { return b > a ? b : a; });
}

// Argmax with deterministic tie-break on the lowest index.
struct Scored {
  double value;
  std::int64_t index;
};

template <class V>
inline Scored argmax_reduce(std::int64_t n, V&& value_at) {
  Scored init{-1.0 / 0.0, -1};
  auto item = [&](std::int64_t i) { return Scored{value_at(i), i}; };
  auto pick = [](const Scored& a, const Scored& b) {
    if (b.value > a.value) return b;
    if (b.value < a.value) return a;
    return b.index >= 0 && (a.index < 0 || b.index < a.index) ? b : a;
  };
  return reduce(n, init, item, pick);
}

}  // namespace hjb::par
