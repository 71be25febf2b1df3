#include "contrailseg/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "contrailseg/errors.hpp"

namespace contrailseg {

int worker_count(int jobs) {
  if (jobs <= 1) return jobs < 0 ? 0 : jobs;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int workers = jobs < hw ? jobs : hw;
  if (const char* env = std::getenv("CONTRAILSEG_THREADS")) {
    int cap = 0;
    try {
      size_t used = 0;
      cap = std::stoi(env, &used);
      if (used != std::string(env).size()) cap = 0;
    } catch (...) {
      cap = 0;
    }
    if (cap < 1)
      throw ConfigError("CONTRAILSEG_THREADS must be a positive integer, got '" +
                        std::string(env) + "'");
    if (cap < workers) workers = cap;
  }
  return workers;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto drain = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(drain);
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace contrailseg
