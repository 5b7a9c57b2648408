#include "sagmec/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fs = std::filesystem;

namespace sagmec {

namespace {

struct Summary {
  std::string policy, objective;
  int users = 0;
  double median_energy = 0, iqr_energy = 0;
  double median_latency = 0, iqr_latency = 0;
  double completed_rate = 1;
  int episodes = 0;
};

std::map<std::string, std::string> read_kv(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double get_num(const std::map<std::string, std::string>& kv, const std::string& key, double dflt = 0) {
  const auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stod(it->second);
}

}  // namespace

void report(const std::string& run_root, const std::string& out_dir, std::ostream& table_out) {
  std::vector<Summary> rows;
  if (!fs::exists(run_root)) throw std::runtime_error("report: no such directory: " + run_root);
  for (const auto& entry : fs::recursive_directory_iterator(run_root)) {
    if (!entry.is_regular_file() || entry.path().filename() != "summary.kv") continue;
    const auto kv = read_kv(entry.path());
    Summary s;
    s.policy = kv.count("policy") ? kv.at("policy") : "?";
    s.objective = kv.count("objective") ? kv.at("objective") : "?";
    s.users = static_cast<int>(get_num(kv, "users"));
    s.median_energy = get_num(kv, "median_energy_j");
    s.iqr_energy = get_num(kv, "iqr_energy_j");
    s.median_latency = get_num(kv, "median_latency_s");
    s.iqr_latency = get_num(kv, "iqr_latency_s");
    s.completed_rate = get_num(kv, "completed_rate", 1);
    s.episodes = static_cast<int>(get_num(kv, "episodes"));
    rows.push_back(std::move(s));
  }
  if (rows.empty()) throw std::runtime_error("report: no completed runs under " + run_root);

  for (const Summary& s : rows)
    if (s.objective != rows.front().objective)
      throw std::runtime_error("report: refusing to mix objectives '" + rows.front().objective +
                               "' and '" + s.objective + "' in one table");

  std::ostringstream table;
  table << std::left << std::setw(10) << "policy" << std::setw(8) << "users" << std::setw(10)
        << "episodes" << std::setw(16) << "med energy[J]" << std::setw(14) << "IQR[J]"
        << std::setw(16) << "med latency[s]" << std::setw(14) << "IQR[s]" << std::setw(10)
        << "done[%]" << "\n";
  table << std::string(96, '-') << "\n";
  std::vector<Summary> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const Summary& a, const Summary& b) {
    return std::tie(a.policy, a.users) < std::tie(b.policy, b.users);
  });
  table.precision(5);
  for (const Summary& s : sorted)
    table << std::left << std::setw(10) << s.policy << std::setw(8) << s.users << std::setw(10)
          << s.episodes << std::setw(16) << s.median_energy << std::setw(14) << s.iqr_energy
          << std::setw(16) << s.median_latency << std::setw(14) << s.iqr_latency << std::setw(10)
          << 100.0 * s.completed_rate << "\n";
  table_out << table.str();

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "table.txt");
    f << table.str();
  }
  {
    std::ofstream e(fs::path(out_dir) / "energy_vs_users.csv");
    e << "users,policy,median_energy_j,iqr_energy_j\n";
    e.precision(17);
    for (const Summary& s : sorted)
      e << s.users << "," << s.policy << "," << s.median_energy << "," << s.iqr_energy << "\n";
  }
  {
    std::ofstream l(fs::path(out_dir) / "latency_vs_users.csv");
    l << "users,policy,median_latency_s,iqr_latency_s\n";
    l.precision(17);
    for (const Summary& s : sorted)
      l << s.users << "," << s.policy << "," << s.median_latency << "," << s.iqr_latency << "\n";
  }
}

}  // namespace sagmec
