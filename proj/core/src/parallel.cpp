#include "stba/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace stba {

namespace {

std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, int chunks, int index) {
  const std::size_t c = static_cast<std::size_t>(chunks);
  const std::size_t i = static_cast<std::size_t>(index);
  const std::size_t base = n / c;
  const std::size_t extra = n % c;
  const std::size_t begin = i * base + std::min(i, extra);
  const std::size_t end = begin + base + (i < extra ? 1 : 0);
  return {begin, end};
}

}  // namespace

WorkerPool::WorkerPool(int workers) {
  const int extra = std::max(workers, 1) - 1;
  threads_.reserve(static_cast<std::size_t>(extra));
  for (int i = 0; i < extra; ++i) {
    threads_.emplace_back([this, i] { worker_loop(i + 1); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  start_cv_.notify_all();
  // jthread joins on destruction.
}

void WorkerPool::worker_loop(int index) {
  std::size_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t, std::size_t)>* body;
    std::size_t n;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
      body = body_;
      n = n_;
    }
    const auto [begin, end] = chunk_bounds(n, size(), index);
    if (begin < end) (*body)(begin, end);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (threads_.empty() || n == 1) {
    body(0, n);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    body_ = &body;
    n_ = n;
    pending_ = static_cast<int>(threads_.size());
    ++generation_;
  }
  start_cv_.notify_all();
  const auto [begin, end] = chunk_bounds(n, size(), 0);
  if (begin < end) body(begin, end);
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [&] { return pending_ == 0; });
  body_ = nullptr;
}

void parallel_for(WorkerPool* pool, std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (pool != nullptr) {
    pool->parallel_for(n, body);
  } else if (n > 0) {
    body(0, n);
  }
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

int resolve_worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STBA_WORKERS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace stba
