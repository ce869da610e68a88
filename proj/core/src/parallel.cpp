#include "dssc/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace dssc {

int thread_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("DSSC_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

namespace {

// Persistent pool: parallel_for is called on small hot paths, so per-call
// thread spawning would dominate the work. Workers block on a generation
// counter; the job body must not throw. Intentionally leaked (workers may
// be parked in cv_.wait at static destruction time).
class WorkerPool {
 public:
  explicit WorkerPool(int workers) : workers_(workers) {
    for (int i = 0; i < workers_; ++i) std::thread([this] { loop(); }).detach();
  }

  void run(Index begin, Index end, const std::function<void(Index)>& fn, Index grain) {
    {
      std::lock_guard<std::mutex> lock(m_);
      fn_ = &fn;
      next_.store(begin, std::memory_order_relaxed);
      end_ = end;
      grain_ = grain;
      pending_ = workers_;
      ++generation_;
    }
    cv_.notify_all();
    work();
    std::unique_lock<std::mutex> lock(m_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

 private:
  void loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(m_);
        cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
      }
      work();
      {
        std::lock_guard<std::mutex> lock(m_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  void work() {
    const Index end = end_;
    const Index grain = grain_;
    const std::function<void(Index)>* fn = fn_;
    for (;;) {
      const Index start = next_.fetch_add(grain, std::memory_order_relaxed);
      if (start >= end) return;
      const Index stop = std::min(start + grain, end);
      for (Index i = start; i < stop; ++i) (*fn)(i);
    }
  }

  const int workers_;
  std::mutex m_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(Index)>* fn_ = nullptr;
  std::atomic<Index> next_{0};
  Index end_ = 0;
  Index grain_ = 1;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
};

}  // namespace

void parallel_for(Index begin, Index end, const std::function<void(Index)>& fn, Index grain) {
  const Index count = end - begin;
  if (count <= 0) return;
  const int workers = thread_count();
  if (workers == 1 || count <= grain) {
    for (Index i = begin; i < end; ++i) fn(i);
    return;
  }
  static WorkerPool* pool = new WorkerPool(thread_count() - 1);
  pool->run(begin, end, fn, grain);
}

}  // namespace dssc
