#include "mlmfg/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mlmfg/errors.hpp"

namespace mlmfg {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(fmt::format("{}: expected an object", path));
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(fmt::format("{}: missing field \"{}\"", path.empty() ? "<root>" : path, key));
  }
  return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(fmt::format("{}: expected a number", path));
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(fmt::format("{}: expected an array of numbers", path));
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(j[i], fmt::format("{}[{}]", path, i));
  return out;
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(fmt::format("{}: expected a row-major array of rows", path));
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : (j[0].is_array() ? j[0].size() : 0);
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = fmt::format("{}[{}]", path, r);
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError(fmt::format("{}: expected a row of {} numbers", rp, cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], fmt::format("{}[{}]", rp, c));
    }
  }
  return out;
}

std::vector<int> counts_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(fmt::format("{}: expected an array of integers", path));
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) throw ParseError(fmt::format("{}[{}]: expected an integer", path, i));
    out.push_back(j[i].get<int>());
  }
  return out;
}

void note_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path,
                  std::vector<std::string>* warnings) {
  if (warnings == nullptr || !obj.is_object()) return;
  for (const auto& item : obj.items()) {
    const bool is_known =
        std::any_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; });
    if (!is_known) warnings->push_back(fmt::format("{}: ignoring unknown field \"{}\"", path, item.key()));
  }
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

ProblemInstance parse_instance(std::string_view text, std::vector<std::string>* warnings) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("line {}: {}", line_of(text, e.byte), e.what()));
  }

  const json& version = field(root, "version", "");
  if (!version.is_number_integer()) throw ParseError("version: expected an integer");
  if (version.get<int>() != kInstanceSchemaVersion) {
    throw ParseError(fmt::format("version: unsupported schema version {} (expected {})", version.get<int>(),
                                 kInstanceSchemaVersion));
  }
  note_unknown(root, {"version", "dims", "leaders", "followers", "coupling"}, "<root>", warnings);

  ProblemInstance inst;
  const json& dims = field(root, "dims", "");
  note_unknown(dims, {"n_nu", "m_omega", "l_omega", "p_nu"}, "dims", warnings);
  inst.dims.leader_dims = counts_of(field(dims, "n_nu", "dims"), "dims.n_nu");
  inst.dims.follower_dims = counts_of(field(dims, "m_omega", "dims"), "dims.m_omega");
  inst.dims.follower_constraints = counts_of(field(dims, "l_omega", "dims"), "dims.l_omega");
  inst.dims.leader_rows = counts_of(field(dims, "p_nu", "dims"), "dims.p_nu");

  const json& leaders = field(root, "leaders", "");
  if (!leaders.is_array()) throw ParseError("leaders: expected an array");
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    const std::string p = fmt::format("leaders[{}]", i);
    const json& L = leaders[i];
    note_unknown(L, {"H", "G_cross", "D", "q", "A", "b"}, p, warnings);
    LeaderBlock block;
    block.H = matrix_of(field(L, "H", p), join(p, "H"));
    block.G_cross = matrix_of(field(L, "G_cross", p), join(p, "G_cross"));
    const json& D = field(L, "D", p);
    if (!D.is_array()) throw ParseError(fmt::format("{}.D: expected an array of matrices", p));
    for (std::size_t w = 0; w < D.size(); ++w) block.D.push_back(matrix_of(D[w], fmt::format("{}.D[{}]", p, w)));
    block.q = vector_of(field(L, "q", p), join(p, "q"));
    block.A = matrix_of(field(L, "A", p), join(p, "A"));
    block.b = vector_of(field(L, "b", p), join(p, "b"));
    inst.leaders.push_back(std::move(block));
  }

  const json& followers = field(root, "followers", "");
  if (!followers.is_array()) throw ParseError("followers: expected an array");
  for (std::size_t i = 0; i < followers.size(); ++i) {
    const std::string p = fmt::format("followers[{}]", i);
    const json& F = followers[i];
    note_unknown(F, {"M", "Q_cross", "c", "a"}, p, warnings);
    FollowerBlock block;
    block.M = matrix_of(field(F, "M", p), join(p, "M"));
    block.Q_cross = matrix_of(field(F, "Q_cross", p), join(p, "Q_cross"));
    block.c = vector_of(field(F, "c", p), join(p, "c"));
    block.a = number(field(F, "a", p), join(p, "a"));
    inst.followers.push_back(std::move(block));
  }

  const json& coupling = field(root, "coupling", "");
  if (!coupling.is_array()) throw ParseError("coupling: expected an array of vectors");
  for (std::size_t i = 0; i < coupling.size(); ++i) {
    inst.coupling.push_back(vector_of(coupling[i], fmt::format("coupling[{}]", i)));
  }
  return inst;
}

std::string format_instance(const ProblemInstance& inst) {
  json root;
  root["version"] = kInstanceSchemaVersion;
  root["dims"] = {{"n_nu", inst.dims.leader_dims},
                  {"m_omega", inst.dims.follower_dims},
                  {"l_omega", inst.dims.follower_constraints},
                  {"p_nu", inst.dims.leader_rows}};
  root["leaders"] = json::array();
  for (const auto& L : inst.leaders) {
    json D = json::array();
    for (const auto& d : L.D) D.push_back(to_json(d));
    root["leaders"].push_back({{"H", to_json(L.H)},
                               {"G_cross", to_json(L.G_cross)},
                               {"D", std::move(D)},
                               {"q", to_json(L.q)},
                               {"A", to_json(L.A)},
                               {"b", to_json(L.b)}});
  }
  root["followers"] = json::array();
  for (const auto& F : inst.followers) {
    root["followers"].push_back(
        {{"M", to_json(F.M)}, {"Q_cross", to_json(F.Q_cross)}, {"c", to_json(F.c)}, {"a", F.a}});
  }
  root["coupling"] = json::array();
  for (const auto& d : inst.coupling) root["coupling"].push_back(to_json(d));
  return root.dump(2) + "\n";
}

ProblemInstance load_instance(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("{}: cannot open instance file", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_instance(buffer.str(), warnings);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(fmt::format("{}: cannot open for writing", path.string()));
  out << format_instance(inst);
  if (!out) throw ParseError(fmt::format("{}: write failed", path.string()));
}

}  // namespace mlmfg
