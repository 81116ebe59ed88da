#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>

#include "dpt/errors.hpp"
#include "dpt/loader.hpp"
#include "test_support.hpp"

namespace dpt {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;

LoaderConfig workers_prefetch(std::size_t w, std::size_t pf) {
  LoaderConfig c;
  c.num_workers = w;
  c.prefetch_factor = pf;
  return c;
}

// Time-stepped state-machine simulation of the same queueing contract, kept
// deliberately different from the closed-form recurrence in trace_schedule.
Nanos reference_schedule(std::size_t workers, std::size_t depth, std::size_t sinks, Nanos drain,
                         const std::vector<Nanos>& costs) {
  enum class State { Idle, Producing, Holding, Done };
  const std::size_t n = costs.size();
  struct Worker {
    State state = State::Idle;
    std::size_t next = 0;  // next seq to produce
    std::size_t current = 0;
    Nanos finish{0};
    std::deque<std::size_t> queue;
  };
  std::vector<Worker> ws(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    ws[w].next = w;
    if (w >= n) ws[w].state = State::Done;
  }
  std::vector<Nanos> sink_busy(sinks, Nanos::zero());
  std::optional<std::size_t> holding;
  std::size_t next_seq = 0;
  Nanos now{0};
  Nanos last{0};

  while (next_seq < n || holding) {
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto& w : ws) {
        if (w.state == State::Idle) {
          w.current = w.next;
          w.finish = now + costs[w.current];
          w.state = State::Producing;
          progress = true;
        }
        if (w.state == State::Producing && w.finish <= now) {
          w.state = State::Holding;
          progress = true;
        }
        if (w.state == State::Holding && w.queue.size() < depth) {
          w.queue.push_back(w.current);
          w.next += workers;
          w.state = w.next < n ? State::Idle : State::Done;
          progress = true;
        }
      }
      if (!holding && next_seq < n) {
        auto& q = ws[next_seq % workers].queue;
        if (!q.empty() && q.front() == next_seq) {
          q.pop_front();
          holding = next_seq;
          progress = true;
        }
      }
      if (holding && sink_busy[*holding % sinks] <= now) {
        sink_busy[*holding % sinks] = now + drain;
        last = std::max(last, now + drain);
        holding.reset();
        ++next_seq;
        progress = true;
      }
    }
    if (next_seq >= n && !holding) break;
    Nanos next_event = Nanos::max();
    for (const auto& w : ws) {
      if (w.state == State::Producing && w.finish > now) next_event = std::min(next_event, w.finish);
    }
    for (const Nanos b : sink_busy) {
      if (b > now) next_event = std::min(next_event, b);
    }
    if (next_event == Nanos::max()) throw std::logic_error("reference schedule deadlocked");
    now = next_event;
  }
  return last;
}

TEST(AssignBatches, RoundRobin) {
  EXPECT_EQ(assign_batches(6, 3), (std::vector<std::size_t>{0, 1, 2, 0, 1, 2}));
  const auto five = assign_batches(5, 3);
  std::vector<std::size_t> counts(3);
  for (auto w : five) ++counts[w];
  EXPECT_EQ(counts, (std::vector<std::size_t>{2, 2, 1}));
  const auto single = assign_batches(7, 1);
  EXPECT_TRUE(std::all_of(single.begin(), single.end(), [](auto w) { return w == 0; }));
}

TEST(SimulateSchedule, SerialWorkerSumsCosts) {
  const std::vector<Nanos> costs{1s, 1s, 1s};
  EXPECT_EQ(simulate_schedule(workers_prefetch(1, 2), SinkConfig{}, costs), 3s);
}

TEST(SimulateSchedule, TwoWorkersOverlapPerfectly) {
  const std::vector<Nanos> costs{1s, 1s};
  EXPECT_EQ(simulate_schedule(workers_prefetch(2, 1), SinkConfig{}, costs), 1s);
}

TEST(SimulateSchedule, ProducerHiddenBehindSerialDrain) {
  // produce b0 0-1, drain b0 1-3; produce b1 1-2, wait for the sink, drain b1 3-5
  const std::vector<Nanos> costs{1s, 1s};
  const SinkConfig sink{1, 2s};
  const ScheduleTrace t = trace_schedule(workers_prefetch(1, 1), sink, costs);
  EXPECT_EQ(t.transfer_time, 5s);
  EXPECT_EQ(t.drain_start[1], 3s);
  EXPECT_EQ(t.produce_start[1], 1s);
}

TEST(SimulateSchedule, SingleWorkerNoDrainEqualsExactSum) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 100; ++round) {
    std::vector<Nanos> costs(rng() % 40);
    Nanos sum{0};
    for (auto& c : costs) {
      c = Nanos{static_cast<std::int64_t>(rng() % 1'000'000)};
      sum += c;
    }
    ASSERT_EQ(simulate_schedule(workers_prefetch(1, 1), SinkConfig{}, costs), sum);
  }
}

TEST(SimulateSchedule, EmptyEpochTakesNoTime) {
  EXPECT_EQ(simulate_schedule(workers_prefetch(3, 2), SinkConfig{2, 1s}, {}), 0ns);
}

TEST(SimulateSchedule, MatchesReferenceSimulation) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 2000; ++round) {
    const std::size_t workers = 1 + rng() % 6;
    const std::size_t depth = 1 + rng() % 4;
    const std::size_t sinks = 1 + rng() % 3;
    const Nanos drain{static_cast<std::int64_t>(rng() % 4 == 0 ? 0 : rng() % 50)};
    std::vector<Nanos> costs(rng() % 30);
    for (auto& c : costs) c = Nanos{static_cast<std::int64_t>(rng() % 100)};
    const ScheduleTrace t = trace_schedule(workers_prefetch(workers, depth), SinkConfig{sinks, drain}, costs);
    ASSERT_EQ(t.transfer_time, reference_schedule(workers, depth, sinks, drain, costs))
        << "W=" << workers << " Pf=" << depth << " G=" << sinks << " drain=" << drain.count();
    ASSERT_LE(t.peak_queue_depth, depth);
    for (std::size_t s = 1; s < costs.size(); ++s) ASSERT_LE(t.dispatched[s - 1], t.dispatched[s]);
  }
}

TEST(SimulateSchedule, NonIncreasingInWorkersForEqualCosts) {
  for (std::size_t n = 1; n <= 40; ++n) {
    const std::vector<Nanos> costs(n, 7ms);
    for (std::size_t depth = 1; depth <= 3; ++depth) {
      Nanos prev = Nanos::max();
      for (std::size_t w = 1; w <= 12; ++w) {
        const Nanos t = simulate_schedule(workers_prefetch(w, depth), SinkConfig{}, costs);
        ASSERT_LE(t, prev) << "n=" << n << " W=" << w;
        prev = t;
      }
    }
  }
}

TEST(SimulateSchedule, QueueNeverExceedsPrefetchUnderSlowSink) {
  const std::vector<Nanos> costs(50, 1ms);
  for (std::size_t depth = 1; depth <= 5; ++depth) {
    const auto t = trace_schedule(workers_prefetch(3, depth), SinkConfig{1, 20ms}, costs);
    EXPECT_EQ(t.peak_queue_depth, depth);
  }
}

struct EpochFixture : ::testing::Test {
  TempDir dir;
  Manifest manifest = testing::small_dataset(dir, 40, 64);
};

TEST_F(EpochFixture, SerialVirtualEpochIsSumOfProduceCosts) {
  LoaderConfig c = workers_prefetch(1, 1);
  c.batch_size = 10;
  c.latency.miss_seek = 1ms;
  c.transform.per_item = 10us;
  CacheEmulator cache(1 << 20);
  Nanos sum{0};
  const EpochReport r = run_epoch(c, SinkConfig{}, manifest, cache, 0, [&](const Batch& b) { sum += b.produce_elapsed; });
  EXPECT_EQ(r.delivery_order, (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(r.transfer_time, sum);
  EXPECT_EQ(r.transfer_time, 40 * (1ms + 10us));
  EXPECT_EQ(r.cache_misses, 40u);
  EXPECT_EQ(r.per_worker_batches, (std::vector<std::size_t>{4}));
}

TEST_F(EpochFixture, PayloadStreamIndependentOfParallelism) {
  auto stream = [&](std::size_t w, std::size_t pf, TimingMode mode) {
    LoaderConfig c = workers_prefetch(w, pf);
    c.batch_size = 6;
    c.shuffle = true;
    c.seed = 11;
    c.mode = mode;
    CacheEmulator cache(1 << 20);
    Bytes all;
    run_epoch(c, SinkConfig{}, manifest, cache, 2, [&](const Batch& b) {
      all.insert(all.end(), b.payload.begin(), b.payload.end());
    });
    return all;
  };
  const Bytes ref = stream(1, 1, TimingMode::Virtual);
  EXPECT_EQ(ref.size(), 40u * 64u);
  EXPECT_EQ(stream(2, 1, TimingMode::Virtual), ref);
  EXPECT_EQ(stream(3, 2, TimingMode::Realtime), ref);
  EXPECT_EQ(stream(4, 4, TimingMode::Realtime), ref);
}

TEST_F(EpochFixture, RealtimeDeliversInOrder) {
  LoaderConfig c = workers_prefetch(4, 2);
  c.batch_size = 3;
  c.mode = TimingMode::Realtime;
  c.jitter = 300us;
  c.seed = 5;
  CacheEmulator cache(1 << 20);
  const EpochReport r = run_epoch(c, SinkConfig{2, 50us}, manifest, cache, 0);
  ASSERT_EQ(r.batch_count, 14u);
  for (std::size_t s = 0; s < r.delivery_order.size(); ++s) EXPECT_EQ(r.delivery_order[s], s);
  EXPECT_EQ(r.delivery_order.size(), r.batch_count);
  EXPECT_GT(r.transfer_time, 0ns);
  std::size_t sum = 0;
  for (auto n : r.per_worker_batches) sum += n;
  EXPECT_EQ(sum, r.batch_count);
}

TEST_F(EpochFixture, SinkOverflowRaisedBeforeAnyRead) {
  LoaderConfig c = workers_prefetch(2, 2);
  c.batch_size = 8;
  CacheEmulator cache(1 << 20);
  EXPECT_THROW(run_epoch(c, SinkConfig{1, 0ns, 8 * 64 - 1}, manifest, cache, 0), SinkOverflowError);
  EXPECT_EQ(cache.miss_count(), 0u);
  EXPECT_NO_THROW(run_epoch(c, SinkConfig{1, 0ns, 8 * 64}, manifest, cache, 0));
}

TEST_F(EpochFixture, WorkerIoErrorAbortsEpoch) {
  std::filesystem::remove(manifest.root / manifest.items[17].path);
  for (const TimingMode mode : {TimingMode::Virtual, TimingMode::Realtime}) {
    LoaderConfig c = workers_prefetch(3, 1);
    c.batch_size = 4;
    c.mode = mode;
    CacheEmulator cache(1 << 20);
    EXPECT_THROW(run_epoch(c, SinkConfig{}, manifest, cache, 0), IntegrityError);
  }
}

TEST_F(EpochFixture, JitterIsDeterministicInVirtualMode) {
  LoaderConfig c = workers_prefetch(3, 2);
  c.batch_size = 4;
  c.jitter = 1ms;
  c.seed = 8;
  CacheEmulator a(1 << 20), b(1 << 20);
  EXPECT_EQ(run_epoch(c, SinkConfig{}, manifest, a, 1).transfer_time,
            run_epoch(c, SinkConfig{}, manifest, b, 1).transfer_time);
}

TEST(LoaderConfig, Validation) {
  EXPECT_THROW(workers_prefetch(0, 1).validate(), UsageError);
  EXPECT_THROW(workers_prefetch(1, 0).validate(), UsageError);
  EXPECT_THROW((SinkConfig{0, 0ns}.validate()), UsageError);
}

}  // namespace
}  // namespace dpt
