#include "twode/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace twode::csv {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "traj,t";
  for (int j = 1; j <= data.obs_dim; ++j) out << ",o" << j;
  out << ",action";
  if (data.n_action_components == 2) out << ",action2";
  out << ",reward\n";
  for (int i = 0; i < data.n_traj; ++i) {
    for (int t = 0; t < data.horizon; ++t) {
      const int cell = data.row(i, t);
      out << i << ',' << (t + 1);
      for (int j = 0; j < data.obs_dim; ++j)
        out << ',' << format_double(data.observations(cell, j));
      out << ',' << data.actions(cell, 0);
      if (data.n_action_components == 2) out << ',' << data.actions(cell, 1);
      out << ',' << format_double(data.rewards(cell)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty dataset file");
  const auto cols = split_csv_line(header);
  if (cols.size() < 5 || cols[0] != "traj" || cols[1] != "t")
    throw std::runtime_error("unrecognized dataset header in " + path);
  int obs_dim = 0;
  std::size_t c = 2;
  while (c < cols.size() && cols[c] == "o" + std::to_string(obs_dim + 1)) {
    ++obs_dim;
    ++c;
  }
  if (obs_dim == 0 || c >= cols.size() || cols[c] != "action")
    throw std::runtime_error("unrecognized dataset header in " + path);
  ++c;
  int action_components = 1;
  if (c < cols.size() && cols[c] == "action2") {
    action_components = 2;
    ++c;
  }
  if (c + 1 != cols.size() || cols[c] != "reward")
    throw std::runtime_error("unrecognized dataset header in " + path);

  struct Row {
    int traj, t;
    std::vector<double> obs;
    int a1, a2;
    double reward;
  };
  std::vector<Row> rows;
  std::string line;
  int max_traj = -1, max_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != cols.size())
      throw std::runtime_error("bad dataset row: " + line);
    Row r;
    r.traj = std::stoi(fields[0]);
    r.t = std::stoi(fields[1]);
    for (int j = 0; j < obs_dim; ++j) r.obs.push_back(std::stod(fields[2 + j]));
    r.a1 = std::stoi(fields[2 + obs_dim]);
    r.a2 = action_components == 2 ? std::stoi(fields[3 + obs_dim]) : 0;
    r.reward = std::stod(fields[2 + obs_dim + action_components]);
    max_traj = std::max(max_traj, r.traj);
    max_t = std::max(max_t, r.t);
    rows.push_back(std::move(r));
  }

  Dataset data;
  data.n_traj = max_traj + 1;
  data.horizon = max_t;
  data.obs_dim = obs_dim;
  data.n_action_components = action_components;
  const int cells = data.n_traj * data.horizon;
  if (static_cast<int>(rows.size()) != cells)
    throw std::runtime_error("dataset grid is not complete in " + path);
  data.observations.resize(cells, obs_dim);
  data.actions.resize(cells, action_components);
  data.rewards.resize(cells);
  data.next_observations = Eigen::MatrixXd::Zero(cells, obs_dim);
  data.initial_obs.resize(data.n_traj, obs_dim);
  data.next_available.assign(cells, false);
  for (const auto& r : rows) {
    const int cell = data.row(r.traj, r.t - 1);
    for (int j = 0; j < obs_dim; ++j) data.observations(cell, j) = r.obs[j];
    data.actions(cell, 0) = r.a1;
    if (action_components == 2) data.actions(cell, 1) = r.a2;
    data.rewards(cell) = r.reward;
  }
  for (int i = 0; i < data.n_traj; ++i) {
    data.initial_obs.row(i) = data.observations.row(data.row(i, 0));
    for (int t = 0; t + 1 < data.horizon; ++t) {
      data.next_observations.row(data.row(i, t)) =
          data.observations.row(data.row(i, t + 1));
      data.next_available[data.row(i, t)] = true;
    }
  }
  data.validate();
  return data;
}

void write_latents(const std::string& dir, const LatentTable& latents) {
  {
    std::ofstream out(dir + "/latents_u.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write latents_u.csv");
    out << "traj,u\n";
    for (int i = 0; i < latents.u.size(); ++i)
      out << i << ',' << format_double(latents.u(i)) << '\n';
  }
  {
    std::ofstream out(dir + "/latents_w.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write latents_w.csv");
    out << "t,w\n";
    for (int t = 0; t < latents.w.size(); ++t)
      out << (t + 1) << ',' << format_double(latents.w(t)) << '\n';
  }
  if (latents.has_tumor_aux()) {
    std::ofstream out(dir + "/latents_tumor.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write latents_tumor.csv");
    out << "traj,group,rho,K,beta_c,alpha,beta\n";
    for (std::size_t i = 0; i < latents.group.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out << i << ',' << latents.group[i] << ',' << format_double(latents.rho(k)) << ','
          << format_double(latents.K(k)) << ',' << format_double(latents.beta_c(k)) << ','
          << format_double(latents.alpha(k)) << ',' << format_double(latents.beta(k))
          << '\n';
    }
  }
}

std::string text_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return text_hash(buffer.str());
}

}  // namespace twode::csv
