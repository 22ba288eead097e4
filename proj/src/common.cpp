#include "minusface/common.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace minusface {
namespace {

// Small persistent pool. Chunks are claimed one at a time under the mutex;
// each chunk runs entirely on one worker, so per-chunk accumulation order is
// fixed and results do not depend on the worker count.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) {
    workers = std::max(1, workers);
    for (int i = 0; i < workers - 1; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  void run(int n, const std::function<void(int)>& fn) {
    {
      std::unique_lock<std::mutex> lk(mu_);
      fn_ = &fn;
      next_ = 0;
      total_ = n;
      pending_ = n;
    }
    cv_.notify_all();
    work();  // the calling thread participates
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    fn_ = nullptr;
    total_ = 0;
  }

 private:
  void worker_loop() {
    for (;;) {
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stop_ || next_ < total_; });
        if (stop_) return;
      }
      work();
    }
  }

  void work() {
    for (;;) {
      const std::function<void(int)>* fn;
      int idx;
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (next_ >= total_) return;
        idx = next_++;
        fn = fn_;
      }
      (*fn)(idx);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int)>* fn_ = nullptr;
  int next_ = 0;
  int total_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

int g_threads = 0;  // 0 = auto

ThreadPool& pool() {
  static ThreadPool p(g_threads > 0 ? g_threads
                                    : static_cast<int>(std::thread::hardware_concurrency()));
  return p;
}

}  // namespace

void set_num_threads(int n) { g_threads = n; }

int num_threads() { return pool().size(); }

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (n == 1 || num_threads() == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  pool().run(n, fn);
}

}  // namespace minusface
