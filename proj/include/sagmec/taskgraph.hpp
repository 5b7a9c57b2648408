#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace sagmec {

using TaskId = std::int32_t;

struct Task {
  TaskId id = 0;
  double data_size_bits = 0;
  double cpu_cycles = 0;
  std::vector<TaskId> parent_ids;
};

/// Per-user DAG of compute tasks. Tasks are stored in a fixed order that is
/// also a valid topological order for generated graphs.
struct TaskGraph {
  int owner_user = 0;
  std::vector<Task> tasks;

  const Task& task(TaskId id) const;
  bool contains(TaskId id) const;
};

struct CycleError {
  std::vector<std::pair<TaskId, TaskId>> offending_edges;
};

struct ValidationResult {
  bool ok = true;
  CycleError cycle;
};

/// Layered random DAG: task i draws each earlier task as a parent with
/// probability edge_prob. Data sizes uniform in [size_min, size_max] bits,
/// CPU demand fixed at cpu_cycles.
TaskGraph generate_dag(int n_tasks, double size_min_bits, double size_max_bits, double cpu_cycles,
                       double edge_prob, std::mt19937_64& rng, int owner_user = 0);

/// Tasks whose parents are all completed and which are not completed themselves.
std::set<TaskId> ready_tasks(const TaskGraph& graph, const std::set<TaskId>& completed_ids);

/// Topological check; on failure reports one set of edges witnessing a cycle.
ValidationResult validate(const TaskGraph& graph);

/// Line-based text form: one task per line as "id data_bits cpu_cycles p1,p2,...".
std::string serialize(const TaskGraph& graph);
TaskGraph deserialize_taskgraph(std::istream& in);
TaskGraph deserialize_taskgraph(const std::string& text);

}  // namespace sagmec
