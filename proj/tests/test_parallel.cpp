#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>

#include "sshphoton/parallel.hpp"

using namespace sshphoton;

TEST(Parallel, EverySlotOnce) {
  for (int threads : {1, 2, 5}) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Parallel, LowestFailingIndexWins) {
  const auto run = [](int threads) {
    try {
      parallel_for(50, threads, [](std::size_t i) {
        if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
      });
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(run(1), "7");
  EXPECT_EQ(run(4), "7");
}

TEST(Parallel, DefaultThreadsFromEnvironment) {
  ::setenv("SSH_SIM_THREADS", "3", 1);
  EXPECT_EQ(default_threads(), 3);
  ::setenv("SSH_SIM_THREADS", "junk", 1);
  EXPECT_EQ(default_threads(), 1);
  ::unsetenv("SSH_SIM_THREADS");
  EXPECT_EQ(default_threads(), 1);
}
