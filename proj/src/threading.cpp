#include "stereokit/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace stereokit {

namespace {

int resolve_default_threads() {
  if (const char* env = std::getenv("STEREOKIT_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_max_threads{0};  // 0 = not resolved yet

// Minimal persistent pool. Work is a single (begin, end) range closure per
// worker; the caller blocks until all workers finish, so there is no queue.
class Pool {
 public:
  explicit Pool(int workers) : stop_(false), generation_(0), pending_(0) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  ~Pool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int workers() const { return static_cast<int>(threads_.size()); }

  void run(const std::function<void(int)>& task) {
    {
      std::unique_lock<std::mutex> lk(mu_);
      task_ = &task;
      pending_ = workers();
      ++generation_;
    }
    cv_.notify_all();
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    task_ = nullptr;
  }

 private:
  void worker_loop(int index) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* task = nullptr;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        task = task_;
      }
      (*task)(index);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_;
  std::uint64_t generation_;
  int pending_;
  const std::function<void(int)>* task_ = nullptr;
};

Pool* pool_instance(int workers) {
  static Pool* pool = new Pool(workers);
  return pool;
}

}  // namespace

int max_threads() {
  int n = g_max_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = resolve_default_threads();
    g_max_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_max_threads(int n) { g_max_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                  std::int64_t grain) {
  if (n <= 0) return;
  int want = max_threads();
  if (want <= 1 || n < grain) {
    fn(0, n);
    return;
  }
  // The pool is created once at full requested width; max_threads() only
  // limits how many workers receive a non-empty range.
  Pool* pool = pool_instance(want);
  int parts = want < pool->workers() ? want : pool->workers();
  if (parts > n) parts = static_cast<int>(n);
  std::int64_t chunk = (n + parts - 1) / parts;
  std::function<void(int)> task = [&](int worker) {
    std::int64_t begin = static_cast<std::int64_t>(worker) * chunk;
    std::int64_t end = begin + chunk < n ? begin + chunk : n;
    if (begin < end) fn(begin, end);
  };
  pool->run(task);
}

}  // namespace stereokit
