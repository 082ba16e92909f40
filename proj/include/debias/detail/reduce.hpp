#pragma once

#include <cstddef>
#include <future>
#include <utility>

namespace debias::detail {

// Fixed binary reduction tree over [lo, hi): the split points depend only on
// the range, never on the worker count, so partial sums combine in the same
// order (and produce the same floating-point bits) for any thread count.
constexpr std::size_t kReduceGrain = 1024;

template <class Acc, class LeafFn, class JoinFn>
Acc pairwise_reduce(std::size_t lo, std::size_t hi, const LeafFn& leaf,
                    const JoinFn& join, int async_depth) {
  if (hi - lo <= kReduceGrain) return leaf(lo, hi);
  const std::size_t mid = lo + (hi - lo) / 2;
  if (async_depth > 0) {
    auto right = std::async(std::launch::async, [&] {
      return pairwise_reduce<Acc>(mid, hi, leaf, join, async_depth - 1);
    });
    Acc left = pairwise_reduce<Acc>(lo, mid, leaf, join, async_depth - 1);
    return join(std::move(left), right.get());
  }
  Acc left = pairwise_reduce<Acc>(lo, mid, leaf, join, 0);
  Acc right = pairwise_reduce<Acc>(mid, hi, leaf, join, 0);
  return join(std::move(left), std::move(right));
}

inline int async_depth_for_threads(int threads) {
  int depth = 0;
  for (int t = 1; t < threads; t *= 2) ++depth;
  return depth;
}

}  // namespace debias::detail
