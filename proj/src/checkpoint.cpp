#include "sagmec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sagmec {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'G', 'M', 'E', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::int64_t read_i64(std::istream& in) {
  std::int64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_vec(std::ostream& out, const Eigen::VectorXd& v) {
  write_i64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

Eigen::VectorXd read_vec(std::istream& in) {
  const std::int64_t n = read_i64(in);
  if (n < 0 || n > (1LL << 32)) throw std::runtime_error("checkpoint: corrupt vector length");
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
  return v;
}

void write_net(std::ostream& out, const Mlp& net) { write_vec(out, net.params()); }

void read_net(std::istream& in, Mlp& net) {
  const Eigen::VectorXd p = read_vec(in);
  if (p.size() != net.n_params())
    throw std::runtime_error("checkpoint: network shape mismatch");
  net.set_params(p);
}

void write_adam(std::ostream& out, const Adam& opt) {
  write_i64(out, opt.t);
  write_vec(out, opt.m.size() ? opt.m : Eigen::VectorXd());
  write_vec(out, opt.v.size() ? opt.v : Eigen::VectorXd());
}

void read_adam(std::istream& in, Adam& opt) {
  opt.t = read_i64(in);
  opt.m = read_vec(in);
  opt.v = read_vec(in);
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const std::string& path, const LearnerBundle& b, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u64(out, config_hash);

  write_net(out, b.dis.value);
  write_net(out, b.dis.soft_q);
  write_net(out, b.dis.policy);
  write_net(out, b.dis.target_value);
  write_adam(out, b.dis.opt_value);
  write_adam(out, b.dis.opt_q);
  write_adam(out, b.dis.opt_policy);

  write_net(out, b.con.value);
  write_net(out, b.con.soft_q);
  write_net(out, b.con.policy);
  write_net(out, b.con.target_value);
  write_adam(out, b.con.opt_value);
  write_adam(out, b.con.opt_q);
  write_adam(out, b.con.opt_policy);

  write_net(out, b.ell.discrete);
  write_net(out, b.ell.continuous);
  write_adam(out, b.ell.opt_discrete);
  write_adam(out, b.ell.opt_continuous);
  write_net(out, b.ell_bar.discrete);
  write_net(out, b.ell_bar.continuous);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointInfo load_checkpoint(const std::string& path, LearnerBundle& b) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (read_u32(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");

  CheckpointInfo info;
  info.config_hash = read_u64(in);

  read_net(in, b.dis.value);
  read_net(in, b.dis.soft_q);
  read_net(in, b.dis.policy);
  read_net(in, b.dis.target_value);
  read_adam(in, b.dis.opt_value);
  read_adam(in, b.dis.opt_q);
  read_adam(in, b.dis.opt_policy);

  read_net(in, b.con.value);
  read_net(in, b.con.soft_q);
  read_net(in, b.con.policy);
  read_net(in, b.con.target_value);
  read_adam(in, b.con.opt_value);
  read_adam(in, b.con.opt_q);
  read_adam(in, b.con.opt_policy);

  read_net(in, b.ell.discrete);
  read_net(in, b.ell.continuous);
  read_adam(in, b.ell.opt_discrete);
  read_adam(in, b.ell.opt_continuous);
  read_net(in, b.ell_bar.discrete);
  read_net(in, b.ell_bar.continuous);
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
  return info;
}

}  // namespace sagmec
