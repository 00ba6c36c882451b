#include "fkeit/worker_pool.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace fkeit {

int resolve_workers(int requested) {
  if (const char* env = std::getenv("FKEIT_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void run_chunks(std::int64_t n_chunks, int workers,
                const std::function<void(std::int64_t)>& task) {
  if (n_chunks <= 0) return;
  if (workers <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) task(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) return;
      try {
        task(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  int n_threads = static_cast<int>(std::min<std::int64_t>(workers, n_chunks));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fkeit
