#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "oomlearn/oom.hpp"

namespace oomlearn {

void write_model(std::ostream& out, const OomModel& model) {
  using nlohmann::json;
  json j;
  j["O"] = model.num_obs();
  j["T"] = model.horizon();
  json sizes = json::array();
  json members = json::array();
  for (const auto& b : model.bases()) {
    sizes.push_back(b.size());
    json level = json::array();
    for (const auto& m : b.members) level.push_back(m.symbols());
    members.push_back(level);
  }
  j["basis_sizes"] = sizes;
  j["bases"] = members;
  json ops = json::array();
  for (std::size_t t = 0; t < model.horizon(); ++t) {
    for (Symbol o = 1; o <= model.num_obs(); ++o) {
      const auto& a = model.op(t, o);
      std::vector<double> data;
      data.reserve(static_cast<std::size_t>(a.size()));
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
      }
      ops.push_back({{"t", t}, {"o", o}, {"rows", a.rows()}, {"cols", a.cols()}, {"data", data}});
    }
  }
  j["operators"] = ops;
  out << j.dump(1) << '\n';
}

OomModel read_model(std::istream& in) {
  using nlohmann::json;
  const json j = json::parse(in);
  const int num_obs = j.at("O").get<int>();
  const auto horizon = j.at("T").get<std::size_t>();
  const auto sizes = j.at("basis_sizes").get<std::vector<std::size_t>>();
  std::vector<Basis> bases;
  for (std::size_t t = 0; t < j.at("bases").size(); ++t) {
    Basis b{t, {}};
    for (const auto& m : j.at("bases").at(t)) b.members.emplace_back(m.get<std::vector<Symbol>>());
    if (t >= sizes.size() || b.size() != sizes[t]) throw std::invalid_argument("read_model: basis size mismatch");
    bases.push_back(std::move(b));
  }
  std::vector<std::vector<Eigen::MatrixXd>> ops(horizon, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(num_obs)));
  for (const auto& block : j.at("operators")) {
    const auto t = block.at("t").get<std::size_t>();
    const auto o = block.at("o").get<int>();
    const auto rows = block.at("rows").get<Eigen::Index>();
    const auto cols = block.at("cols").get<Eigen::Index>();
    const auto data = block.at("data").get<std::vector<double>>();
    if (t >= horizon || o < 1 || o > num_obs || static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw std::invalid_argument("read_model: malformed operator block");
    }
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
    ops[t][static_cast<std::size_t>(o - 1)] = std::move(a);
  }
  return OomModel(num_obs, horizon, std::move(bases), std::move(ops));
}

void save_model(const std::string& path, const OomModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_model(out, model);
}

OomModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_model(in);
}

}  // namespace oomlearn
