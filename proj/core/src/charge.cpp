#include "dpt/charge.hpp"

#include <ctime>
#include <thread>

namespace dpt {

namespace {

Nanos thread_cpu_now() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return Nanos{static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec};
}

}  // namespace

void spin_cpu(Nanos d) {
  if (d <= Nanos::zero()) return;
  const Nanos deadline = thread_cpu_now() + d;
  volatile std::uint64_t sink = 0;
  while (thread_cpu_now() < deadline) {
    for (int i = 0; i < 64; ++i) sink = sink + static_cast<std::uint64_t>(i);
  }
}

void wait_wall(Nanos d) {
  if (d <= Nanos::zero()) return;
  std::this_thread::sleep_for(d);
}

}  // namespace dpt
