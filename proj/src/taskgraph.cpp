#include "sagmec/taskgraph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace sagmec {

const Task& TaskGraph::task(TaskId id) const {
  for (const Task& t : tasks)
    if (t.id == id) return t;
  throw std::out_of_range("TaskGraph: unknown task id " + std::to_string(id));
}

bool TaskGraph::contains(TaskId id) const {
  return std::any_of(tasks.begin(), tasks.end(), [id](const Task& t) { return t.id == id; });
}

TaskGraph generate_dag(int n_tasks, double size_min_bits, double size_max_bits, double cpu_cycles,
                       double edge_prob, std::mt19937_64& rng, int owner_user) {
  if (n_tasks < 1) throw std::invalid_argument("generate_dag: need at least one task");
  if (!(size_min_bits > 0) || size_max_bits < size_min_bits)
    throw std::invalid_argument("generate_dag: empty or invalid size range");
  if (edge_prob < 0 || edge_prob > 1) throw std::invalid_argument("generate_dag: edge_prob outside [0,1]");

  std::uniform_real_distribution<double> size_dist(size_min_bits, size_max_bits);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  TaskGraph g;
  g.owner_user = owner_user;
  g.tasks.reserve(static_cast<size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) {
    Task t;
    t.id = i;
    t.data_size_bits = size_dist(rng);
    t.cpu_cycles = cpu_cycles;
    for (int p = 0; p < i; ++p)
      if (coin(rng) < edge_prob) t.parent_ids.push_back(p);
    g.tasks.push_back(std::move(t));
  }
  return g;
}

std::set<TaskId> ready_tasks(const TaskGraph& graph, const std::set<TaskId>& completed_ids) {
  for (TaskId id : completed_ids)
    if (!graph.contains(id)) throw std::out_of_range("ready_tasks: unknown completed id " + std::to_string(id));

  std::set<TaskId> ready;
  for (const Task& t : graph.tasks) {
    if (completed_ids.count(t.id)) continue;
    const bool parents_done = std::all_of(t.parent_ids.begin(), t.parent_ids.end(),
                                          [&](TaskId p) { return completed_ids.count(p) > 0; });
    if (parents_done) ready.insert(t.id);
  }
  return ready;
}

ValidationResult validate(const TaskGraph& graph) {
  ValidationResult res;
  std::unordered_map<TaskId, int> indegree;
  for (const Task& t : graph.tasks) {
    if (std::any_of(t.parent_ids.begin(), t.parent_ids.end(), [&](TaskId p) { return p == t.id; })) {
      res.ok = false;
      res.cycle.offending_edges.emplace_back(t.id, t.id);
      return res;
    }
    for (TaskId p : t.parent_ids)
      if (!graph.contains(p)) throw std::out_of_range("validate: edge references unknown task");
    indegree[t.id] = static_cast<int>(t.parent_ids.size());
  }

  // Kahn's algorithm; leftover nodes witness a cycle.
  std::deque<TaskId> frontier;
  for (auto& [id, deg] : indegree)
    if (deg == 0) frontier.push_back(id);
  size_t visited = 0;
  while (!frontier.empty()) {
    TaskId u = frontier.front();
    frontier.pop_front();
    ++visited;
    for (const Task& t : graph.tasks)
      if (std::find(t.parent_ids.begin(), t.parent_ids.end(), u) != t.parent_ids.end())
        if (--indegree[t.id] == 0) frontier.push_back(t.id);
  }
  if (visited != graph.tasks.size()) {
    res.ok = false;
    for (const Task& t : graph.tasks)
      if (indegree[t.id] > 0)
        for (TaskId p : t.parent_ids)
          if (indegree[p] > 0) res.cycle.offending_edges.emplace_back(p, t.id);
  }
  return res;
}

std::string serialize(const TaskGraph& graph) {
  std::ostringstream out;
  out << "user " << graph.owner_user << "\n";
  out.precision(17);
  for (const Task& t : graph.tasks) {
    out << t.id << " " << t.data_size_bits << " " << t.cpu_cycles << " ";
    for (size_t i = 0; i < t.parent_ids.size(); ++i) {
      if (i) out << ",";
      out << t.parent_ids[i];
    }
    if (t.parent_ids.empty()) out << "-";
    out << "\n";
  }
  return out.str();
}

TaskGraph deserialize_taskgraph(std::istream& in) {
  TaskGraph g;
  std::string word;
  if (!(in >> word) || word != "user" || !(in >> g.owner_user))
    throw std::runtime_error("taskgraph: malformed header");
  Task t;
  std::string parents;
  while (in >> t.id >> t.data_size_bits >> t.cpu_cycles >> parents) {
    t.parent_ids.clear();
    if (parents != "-") {
      std::stringstream ps(parents);
      std::string tok;
      while (std::getline(ps, tok, ',')) t.parent_ids.push_back(std::stoi(tok));
    }
    g.tasks.push_back(t);
  }
  return g;
}

TaskGraph deserialize_taskgraph(const std::string& text) {
  std::istringstream in(text);
  return deserialize_taskgraph(in);
}

}  // namespace sagmec
