#pragma once

// Ordered parallel map: produce(k) runs on a bounded pool of worker threads,
// consume(k, result) runs on the calling thread in strictly increasing k.
// Work only reorders internally, so output is identical for every jobs
// value; only wall time changes.

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace rlearn {

template <class T>
void parallel_for_ordered(std::size_t total, int jobs,
                          const std::function<T(std::size_t)>& produce,
                          const std::function<void(std::size_t, T&&)>& consume) {
  if (total == 0) return;
  const std::size_t workers =
      jobs <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(jobs), total);
  if (workers == 1) {
    for (std::size_t k = 0; k < total; ++k) consume(k, produce(k));
    return;
  }

  std::mutex mu;
  std::condition_variable ready;
  std::map<std::size_t, T> finished;
  std::size_t next_claim = 0;
  std::exception_ptr failure;

  auto work = [&] {
    while (true) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure || next_claim >= total) return;
        k = next_claim++;
      }
      try {
        T result = produce(k);
        std::lock_guard<std::mutex> lock(mu);
        finished.emplace(k, std::move(result));
        ready.notify_all();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        ready.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);

  std::size_t next_emit = 0;
  {
    std::unique_lock<std::mutex> lock(mu);
    while (next_emit < total && !failure) {
      ready.wait(lock, [&] {
        return failure || finished.count(next_emit) > 0;
      });
      if (failure) break;
      T item = std::move(finished.at(next_emit));
      finished.erase(next_emit);
      lock.unlock();
      try {
        consume(next_emit, std::move(item));
      } catch (...) {
        lock.lock();
        if (!failure) failure = std::current_exception();
        next_claim = total;  // stop handing out work
        break;
      }
      ++next_emit;
      lock.lock();
    }
  }
  for (std::thread& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rlearn
