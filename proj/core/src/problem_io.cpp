#include "nlirls/problem_io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace nlirls {

namespace {

constexpr std::string_view kFormat = "nlirls-instance/1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_row(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << fmt(v[i]);
  out << '\n';
}

void write_vector(std::ostream& out, const std::string& name, const Vector& v) {
  out << "@vector " << name << ' ' << v.size() << '\n';
  if (v.size() > 0) write_row(out, v);
}

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "@matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i).transpose());
}

[[noreturn]] void fail(int line, const std::string& msg) {
  if (line > 0) raise(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
  raise(ErrorCode::ParseError, msg);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view tok, int line) {
  const std::string s(trim(tok));
  if (s.empty()) fail(line, "empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) fail(line, "bad number '" + s + "'");
  return v;
}

long long parse_int(std::string_view tok, int line) {
  const std::string_view s = trim(tok);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(line, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Block {
  int line = 0;
  Matrix values;  // vectors are stored as one column
  std::vector<long long> indices;
  bool is_indices = false;
};

struct Record {
  std::map<std::string, std::pair<std::string, int>> keys;
  std::map<std::string, Block> blocks;
  int last_line = 0;

  const std::string* find(const std::string& k) const {
    auto it = keys.find(k);
    return it == keys.end() ? nullptr : &it->second.first;
  }
  int line_of(const std::string& k) const {
    auto it = keys.find(k);
    return it == keys.end() ? 0 : it->second.second;
  }
  const std::string& require(const std::string& k) const {
    const std::string* v = find(k);
    if (!v) fail(last_line, "missing key '" + k + "'");
    return *v;
  }
  const Block& block(const std::string& name) const {
    auto it = blocks.find(name);
    if (it == blocks.end()) fail(last_line, "missing block '" + name + "'");
    return it->second;
  }
  Vector vector(const std::string& name) const {
    const Block& b = block(name);
    if (b.is_indices || b.values.cols() != 1) fail(b.line, "'" + name + "' must be a @vector block");
    return b.values.col(0);
  }
  Matrix matrix(const std::string& name) const {
    const Block& b = block(name);
    if (b.is_indices) fail(b.line, "'" + name + "' must be a @matrix block");
    return b.values;
  }
};

Record tokenize(std::istream& in) {
  Record rec;
  std::string raw;
  int line = 0;
  auto next_data_line = [&](const std::string& what) {
    if (!std::getline(in, raw)) fail(line + 1, "unexpected end of input inside block '" + what + "'");
    ++line;
    return std::string(trim(raw));
  };
  auto read_row = [&](const std::string& name, Index expected) {
    const std::string row = next_data_line(name);
    const auto parts = split(row, ',');
    if (static_cast<Index>(parts.size()) != expected) {
      fail(line, "block '" + name + "' expects " + std::to_string(expected) + " values, found " +
                     std::to_string(parts.size()));
    }
    return std::make_pair(row, line);
  };

  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '@') {
      const auto head = split(s.substr(1), ' ');
      std::vector<std::string_view> parts;
      for (auto p : head)
        if (!trim(p).empty()) parts.push_back(trim(p));
      if (parts.empty()) fail(line, "empty block header");
      const std::string kind(parts[0]);
      const int header_line = line;
      Block b;
      b.line = header_line;
      if (kind == "vector" || kind == "indices") {
        if (parts.size() != 3) fail(line, "expected '@" + kind + " <name> <size>'");
        const std::string name(parts[1]);
        const long long n = parse_int(parts[2], line);
        if (n < 0) fail(line, "negative size");
        if (rec.blocks.count(name)) fail(line, "duplicate block '" + name + "'");
        b.is_indices = kind == "indices";
        b.values.resize(b.is_indices ? 0 : n, b.is_indices ? 0 : 1);
        if (n > 0) {
          const auto [row, row_line] = read_row(name, n);
          const auto vals = split(row, ',');
          for (long long i = 0; i < n; ++i) {
            if (b.is_indices) {
              b.indices.push_back(parse_int(vals[static_cast<std::size_t>(i)], row_line));
            } else {
              b.values(i, 0) = parse_real(vals[static_cast<std::size_t>(i)], row_line);
            }
          }
        }
        rec.blocks.emplace(name, std::move(b));
      } else if (kind == "matrix") {
        if (parts.size() != 4) fail(line, "expected '@matrix <name> <rows> <cols>'");
        const std::string name(parts[1]);
        const long long r = parse_int(parts[2], line);
        const long long c = parse_int(parts[3], line);
        if (r < 0 || c < 0) fail(line, "negative size");
        if (rec.blocks.count(name)) fail(line, "duplicate block '" + name + "'");
        b.values.resize(r, c);
        for (long long i = 0; i < r; ++i) {
          if (c == 0) continue;
          const auto [row, row_line] = read_row(name, c);
          const auto vals = split(row, ',');
          for (long long j = 0; j < c; ++j) b.values(i, j) = parse_real(vals[static_cast<std::size_t>(j)], row_line);
        }
        rec.blocks.emplace(name, std::move(b));
      } else {
        fail(line, "unknown block kind '@" + kind + "'");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail(line, "expected key=value, got '" + std::string(s) + "'");
    const std::string key(trim(s.substr(0, eq)));
    if (key.empty()) fail(line, "empty key");
    if (rec.keys.count(key)) fail(line, "duplicate key '" + key + "'");
    rec.keys.emplace(key, std::make_pair(std::string(trim(s.substr(eq + 1))), line));
  }
  rec.last_line = line;
  return rec;
}

void expect_shape(const Block& b, Index rows, Index cols, const std::string& name) {
  if (b.values.rows() != rows || b.values.cols() != cols) {
    fail(b.line, "'" + name + "' has shape " + std::to_string(b.values.rows()) + "x" +
                     std::to_string(b.values.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

void write_instance(std::ostream& out, const ProblemInstance& inst) {
  if (!inst.map) raise(ErrorCode::InvalidConfig, "instance has no map");
  out << "# nlirls problem instance\n";
  out << "format=" << kFormat << '\n';
  if (inst.family) out << "family=" << to_string(*inst.family) << '\n';
  out << "seed=" << inst.seed << '\n';
  out << "noiseless=" << (inst.noiseless ? "true" : "false") << '\n';
  for (const auto& [k, v] : inst.meta) out << "meta." << k << '=' << v << '\n';

  const ResidualMap& map = *inst.map;
  if (dynamic_cast<const Simple1DMap*>(&map)) {
    out << "map.kind=simple_1d\n";
  } else if (const auto* lin = dynamic_cast<const LinearMap*>(&map)) {
    out << "map.kind=linear\n";
    write_matrix(out, "map.matrix", lin->matrix());
  } else if (const auto* rip = dynamic_cast<const PerturbedRipMap*>(&map)) {
    out << "map.kind=perturbed_rip\n";
    out << "map.rho=" << fmt(rip->rho()) << '\n';
    write_matrix(out, "map.a1", rip->a1());
    write_vector(out, "map.z_ref", rip->z_ref());
  } else if (const auto* pr = dynamic_cast<const PhaseRetrievalMap*>(&map)) {
    out << "map.kind=phase_retrieval\n";
    write_matrix(out, "map.a", pr->measurements());
  } else {
    raise(ErrorCode::InvalidConfig, "map type has no text representation");
  }
  write_vector(out, "y", inst.y);
  if (inst.x_star.size() > 0) write_vector(out, "x_star", inst.x_star);
  if (!inst.support.empty()) {
    out << "@indices support " << inst.support.size() << '\n';
    for (std::size_t i = 0; i < inst.support.size(); ++i) out << (i ? "," : "") << inst.support[i];
    out << '\n';
  }
}

std::string instance_to_string(const ProblemInstance& inst) {
  std::ostringstream os;
  write_instance(os, inst);
  return os.str();
}

ProblemInstance read_instance(std::istream& in) {
  const Record rec = tokenize(in);
  const std::string& format = rec.require("format");
  if (format != kFormat) fail(rec.line_of("format"), "unsupported format '" + format + "'");

  ProblemInstance inst;
  if (const std::string* fam = rec.find("family")) {
    inst.family = family_from_string(*fam);
    if (!inst.family) fail(rec.line_of("family"), "unknown family '" + *fam + "'");
  }
  if (const std::string* seed = rec.find("seed")) {
    const int ln = rec.line_of("seed");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(seed->data(), seed->data() + seed->size(), v);
    if (seed->empty() || ec != std::errc() || ptr != seed->data() + seed->size()) {
      fail(ln, "bad seed '" + *seed + "'");
    }
    inst.seed = v;
  }
  if (const std::string* nl = rec.find("noiseless")) {
    if (*nl != "true" && *nl != "false") fail(rec.line_of("noiseless"), "noiseless must be true or false");
    inst.noiseless = *nl == "true";
  }
  for (const auto& [k, v] : rec.keys) {
    if (k.rfind("meta.", 0) == 0) inst.meta[k.substr(5)] = v.first;
  }

  const std::string& kind = rec.require("map.kind");
  const int kind_line = rec.line_of("map.kind");
  try {
    if (kind == "simple_1d") {
      inst.map = make_simple_1d();
    } else if (kind == "linear") {
      inst.map = make_linear(rec.matrix("map.matrix"));
    } else if (kind == "perturbed_rip") {
      const Matrix a1 = rec.matrix("map.a1");
      const Block& zb = rec.block("map.z_ref");
      expect_shape(zb, a1.cols(), 1, "map.z_ref");
      const double rho = parse_real(rec.require("map.rho"), rec.line_of("map.rho"));
      inst.map = std::make_shared<PerturbedRipMap>(a1, rho, zb.values.col(0));
    } else if (kind == "phase_retrieval") {
      inst.map = std::make_shared<PhaseRetrievalMap>(rec.matrix("map.a"));
    } else {
      fail(kind_line, "unknown map.kind '" + kind + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    fail(kind_line, e.what());
  }

  const Block& yb = rec.block("y");
  expect_shape(yb, inst.map->dim_out(), 1, "y");
  inst.y = yb.values.col(0);
  if (rec.blocks.count("x_star")) {
    const Block& xb = rec.blocks.at("x_star");
    expect_shape(xb, inst.map->dim_in(), 1, "x_star");
    inst.x_star = xb.values.col(0);
  }
  if (rec.blocks.count("support")) {
    const Block& sb = rec.blocks.at("support");
    if (!sb.is_indices) fail(sb.line, "'support' must be an @indices block");
    for (long long idx : sb.indices) {
      if (idx < 0 || idx >= inst.map->dim_in()) fail(sb.line + 1, "support index " + std::to_string(idx) + " out of range");
      inst.support.push_back(static_cast<Index>(idx));
    }
  }
  return inst;
}

ProblemInstance parse_instance(std::string_view text) {
  std::istringstream is{std::string(text)};
  return read_instance(is);
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_instance(in);
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidConfig, "cannot write '" + path + "'");
  write_instance(out, inst);
  if (!out) raise(ErrorCode::InvalidConfig, "write to '" + path + "' failed");
}

}  // namespace nlirls
