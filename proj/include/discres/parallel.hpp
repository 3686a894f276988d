#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace discres {

//! Runs `body(i)` for i in [0, count) on `workers` threads with static
//! contiguous chunks. Each index is written by exactly one worker, so results
//! stored per index do not depend on the worker count. The first exception
//! (lowest chunk) is rethrown after all workers join.
template<class Body>
void
parallel_for(std::size_t count, int workers, Body&& body)
{
  const std::size_t nworkers =
    std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (nworkers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(nworkers);
  std::vector<std::thread> threads;
  threads.reserve(nworkers);
  const std::size_t chunk = (count + nworkers - 1) / nworkers;
  for (std::size_t w = 0; w < nworkers; ++w) {
    threads.emplace_back([&, w] {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i)
          body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace discres
