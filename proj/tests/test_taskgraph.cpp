#include <doctest.h>

#include <random>
#include <stdexcept>

#include "sagmec/taskgraph.hpp"

using namespace sagmec;

namespace {
// The two-level dependency example: task 0 is the parent of tasks 1 and 2.
TaskGraph fork_graph() {
  TaskGraph g;
  g.tasks.push_back({0, 8e6, 3e9, {}});
  g.tasks.push_back({1, 8e6, 3e9, {0}});
  g.tasks.push_back({2, 8e6, 3e9, {0}});
  return g;
}
}  // namespace

TEST_CASE("generate_dag single node") {
  std::mt19937_64 rng(1);
  const TaskGraph g = generate_dag(1, 4.8e6, 9.6e6, 3e9, 0.5, rng);
  REQUIRE(g.tasks.size() == 1);
  CHECK(g.tasks[0].parent_ids.empty());
  CHECK(g.tasks[0].cpu_cycles == 3e9);
  CHECK(g.tasks[0].data_size_bits >= 4.8e6);
  CHECK(g.tasks[0].data_size_bits <= 9.6e6);
}

TEST_CASE("generate_dag edge probability extremes") {
  std::mt19937_64 rng(2);
  const TaskGraph parallel = generate_dag(6, 4.8e6, 9.6e6, 3e9, 0.0, rng);
  for (const Task& t : parallel.tasks) CHECK(t.parent_ids.empty());

  const TaskGraph dense = generate_dag(3, 4.8e6, 9.6e6, 3e9, 1.0, rng);
  // every earlier task becomes a parent: 0 + 1 + 2 = 3 edges
  int n_edges = 0;
  for (const Task& t : dense.tasks) n_edges += static_cast<int>(t.parent_ids.size());
  CHECK(n_edges == 3);
  CHECK(dense.tasks[2].parent_ids == std::vector<TaskId>{0, 1});
}

TEST_CASE("generate_dag rejects bad arguments") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(generate_dag(0, 1, 2, 3, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_dag(2, 5, 4, 3, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_dag(2, 1, 2, 3, 1.5, rng), std::invalid_argument);
}

TEST_CASE("ready set on the fork graph") {
  const TaskGraph g = fork_graph();
  CHECK(ready_tasks(g, {}) == std::set<TaskId>{0});
  CHECK(ready_tasks(g, {0}) == std::set<TaskId>{1, 2});
  CHECK(ready_tasks(g, {0, 1, 2}).empty());
  CHECK_THROWS_AS(ready_tasks(g, {7}), std::out_of_range);
}

TEST_CASE("repeated ready/complete consumes every task exactly once") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const TaskGraph g = generate_dag(12, 4.8e6, 9.6e6, 3e9, 0.4, rng);
    std::set<TaskId> completed;
    int completions = 0;
    while (completed.size() < g.tasks.size()) {
      const std::set<TaskId> ready = ready_tasks(g, completed);
      REQUIRE(!ready.empty());  // no starvation
      for (TaskId id : ready) {
        CHECK(completed.insert(id).second);  // no duplication
        ++completions;
      }
    }
    CHECK(completions == static_cast<int>(g.tasks.size()));
  }
}

TEST_CASE("validate") {
  CHECK(validate(TaskGraph{}).ok);
  CHECK(validate(fork_graph()).ok);

  TaskGraph two_cycle;
  two_cycle.tasks.push_back({0, 1e6, 1e9, {1}});
  two_cycle.tasks.push_back({1, 1e6, 1e9, {0}});
  const ValidationResult res = validate(two_cycle);
  CHECK(!res.ok);
  CHECK(!res.cycle.offending_edges.empty());

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial)
    CHECK(validate(generate_dag(10, 1e6, 2e6, 1e9, 0.7, rng)).ok);
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(6);
  const TaskGraph g = generate_dag(8, 4.8e6, 9.6e6, 3e9, 0.5, rng, 3);
  const TaskGraph back = deserialize_taskgraph(serialize(g));
  CHECK(back.owner_user == g.owner_user);
  REQUIRE(back.tasks.size() == g.tasks.size());
  for (size_t i = 0; i < g.tasks.size(); ++i) {
    CHECK(back.tasks[i].id == g.tasks[i].id);
    CHECK(back.tasks[i].data_size_bits == g.tasks[i].data_size_bits);
    CHECK(back.tasks[i].cpu_cycles == g.tasks[i].cpu_cycles);
    CHECK(back.tasks[i].parent_ids == g.tasks[i].parent_ids);
  }
}
