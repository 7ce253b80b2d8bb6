#include "ctlqr/system_io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void write_block(std::ostream& out, const char* name, const Matrix& M) {
  out << name << '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out << (j ? " " : "") << M(i, j);
    }
    out << '\n';
  }
}

}  // namespace

std::pair<Dynamics, CostSpec> parse_system(std::istream& in) {
  std::vector<std::pair<int, std::string>> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (!line.empty()) lines.emplace_back(number, std::move(line));
  }

  long p = -1, q = -1;
  std::map<std::string, Matrix> blocks;
  std::size_t i = 0;
  auto rows_cols = [&](const std::string& name) -> std::pair<long, long> {
    if (name == "A" || name == "sigma" || name == "Q") return {p, p};
    if (name == "B") return {p, q};
    if (name == "R") return {q, q};
    return {-1, -1};
  };
  while (i < lines.size()) {
    const auto& [ln, line] = lines[i];
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      long parsed = 0;
      try {
        std::size_t used = 0;
        parsed = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(ln) +
                          ": bad integer '" + value + "'");
      }
      if (parsed <= 0) {
        throw ConfigError("line " + std::to_string(ln) +
                          ": dimensions must be positive");
      }
      if (key == "p") {
        p = parsed;
      } else if (key == "q") {
        q = parsed;
      } else {
        throw ConfigError("line " + std::to_string(ln) + ": unknown key '" +
                          key + "'");
      }
      ++i;
      continue;
    }
    const std::string name = line;
    const auto [rows, cols] = rows_cols(name);
    if (rows == -1 && cols == -1) {
      throw ConfigError("line " + std::to_string(ln) + ": unknown block '" +
                        name + "'");
    }
    if (p <= 0 || q <= 0) {
      throw ConfigError("line " + std::to_string(ln) +
                        ": p= and q= must precede matrix blocks");
    }
    if (blocks.count(name)) {
      throw ConfigError("line " + std::to_string(ln) + ": duplicate block '" +
                        name + "'");
    }
    Matrix M(rows, cols);
    for (long r = 0; r < rows; ++r) {
      ++i;
      if (i >= lines.size()) {
        throw ConfigError("block " + name + ": expected " +
                          std::to_string(rows) + " rows");
      }
      std::istringstream row(lines[i].second);
      for (long c = 0; c < cols; ++c) {
        if (!(row >> M(r, c))) {
          throw ConfigError("line " + std::to_string(lines[i].first) +
                            ": expected " + std::to_string(cols) +
                            " numbers in block " + name);
        }
      }
      std::string extra;
      if (row >> extra) {
        throw ConfigError("line " + std::to_string(lines[i].first) +
                          ": too many entries in block " + name);
      }
    }
    blocks.emplace(name, std::move(M));
    ++i;
  }
  for (const char* name : {"A", "B", "sigma", "Q", "R"}) {
    if (!blocks.count(name)) {
      throw ConfigError(std::string("missing block '") + name + "'");
    }
  }
  Dynamics dyn{blocks["A"], blocks["B"], blocks["sigma"]};
  CostSpec cost{blocks["Q"], blocks["R"]};
  dyn.check_shapes();
  return {dyn, cost};
}

std::pair<Dynamics, CostSpec> load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open system file", path);
  try {
    return parse_system(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_system(std::ostream& out, const Dynamics& dyn,
                  const CostSpec& cost) {
  const auto old = out.precision(17);
  out << "p=" << dyn.p() << "\nq=" << dyn.q() << '\n';
  write_block(out, "A", dyn.A);
  write_block(out, "B", dyn.B);
  write_block(out, "sigma", dyn.sigma);
  write_block(out, "Q", cost.Q);
  write_block(out, "R", cost.R);
  out.precision(old);
}

}  // namespace ctlqr
