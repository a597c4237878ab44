#ifndef STBA_PARALLEL_HPP_
#define STBA_PARALLEL_HPP_

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace stba {

/// Fixed-size pool of worker threads executing static-partitioned loops.
///
/// parallel_for splits [0, n) into size() contiguous chunks and blocks until
/// every chunk has run. The calling thread executes chunk 0. Bodies must only
/// write to disjoint outputs; any reduction over the results is done by the
/// caller in a fixed order so that values never depend on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = 1);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  void parallel_for(std::size_t n,
                    const std::function<void(std::size_t begin, std::size_t end)>& body);

 private:
  void worker_loop(int index);

  std::vector<std::jthread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::size_t n_ = 0;
  std::size_t generation_ = 0;
  int pending_ = 0;
  bool stopping_ = false;
};

/// Runs body over [0, n) on pool when given, inline otherwise.
void parallel_for(WorkerPool* pool, std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

/// Pairwise (cascade) summation in an order fixed by the input length only.
double pairwise_sum(std::span<const double> values);

/// Resolves a worker count: explicit value if > 0, else $STBA_WORKERS, else 1.
int resolve_worker_count(int requested);

}  // namespace stba

#endif  // STBA_PARALLEL_HPP_
