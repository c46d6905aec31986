#include "merr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "merr/error.hpp"

namespace merr {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

bool blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw DataError("not a number: '" + text + "'");
  return v;
}

PointBag read_bag_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  Eigen::Index cols = -1, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    const auto fields = split_csv(line);
    if (cols < 0) cols = static_cast<Eigen::Index>(fields.size());
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw DataError(path.string() + ": ragged row " + std::to_string(rows + 1));
    for (const auto& f : fields) values.push_back(parse_real(f));
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": empty bag file");
  PointMatrix pts = Eigen::Map<PointMatrix>(values.data(), rows, cols);
  try {
    return PointBag(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_bag_csv(const fs::path& path, const PointBag& bag) {
  auto out = open_out(path);
  for (Eigen::Index n = 0; n < bag.size(); ++n) {
    for (Eigen::Index j = 0; j < bag.dim(); ++j) out << (j ? "," : "") << format_real(bag.points()(n, j));
    out << '\n';
  }
}

Manifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  Manifest m;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    const auto fields = split_csv(line);
    if (first && !fields.empty() && fields[0] == "bag_path") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() < 2) throw DataError(path.string() + ": manifest rows need a path and at least one label");
    fs::path bag = fields[0];
    if (bag.is_relative()) bag = path.parent_path() / bag;
    m.bag_paths.push_back(bag.lexically_normal());
    std::vector<double> y;
    for (std::size_t c = 1; c < fields.size(); ++c) y.push_back(parse_real(fields[c]));
    if (!rows.empty() && y.size() != rows.front().size()) throw DataError(path.string() + ": ragged label columns");
    rows.push_back(std::move(y));
  }
  if (rows.empty()) throw DataError(path.string() + ": empty manifest");
  m.labels.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& bag_paths, const Eigen::MatrixXd& labels) {
  if (static_cast<Eigen::Index>(bag_paths.size()) != labels.rows())
    throw InvalidArgument("write_manifest: path and label counts differ");
  auto out = open_out(path);
  out << "bag_path";
  for (Eigen::Index c = 0; c < labels.cols(); ++c) out << ",y_" << (c + 1);
  out << '\n';
  for (std::size_t r = 0; r < bag_paths.size(); ++r) {
    out << bag_paths[r];
    for (Eigen::Index c = 0; c < labels.cols(); ++c) out << ',' << format_real(labels(static_cast<Eigen::Index>(r), c));
    out << '\n';
  }
}

LabeledDataset load_dataset(const fs::path& manifest_path, double label_bound) {
  Manifest m = read_manifest(manifest_path);
  std::vector<PointBag> bags;
  bags.reserve(m.bag_paths.size());
  for (const auto& p : m.bag_paths) bags.push_back(read_bag_csv(p));
  try {
    return LabeledDataset(std::move(bags), std::move(m.labels), label_bound);
  } catch (const InvalidArgument& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& values, const std::vector<std::string>& header) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_real(values(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line) || line[0] == '#') continue;
    const auto fields = split_csv(line);
    std::vector<double> row;
    try {
      for (const auto& f : fields) row.push_back(parse_real(f));
    } catch (const DataError&) {
      if (rows.empty()) continue;  // header
      throw;
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw DataError(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void save_model(const fs::path& path, const TrainedModel& model, const std::vector<fs::path>& bag_paths) {
  if (static_cast<Eigen::Index>(bag_paths.size()) != model.size())
    throw InvalidArgument("save_model: one bag path per training bag required");
  auto out = open_out(path);
  out << kModelHeader << '\n';
  out << "base.family=" << to_string(model.base().family) << '\n';
  out << "base.bandwidth=" << format_real(model.base().bandwidth) << '\n';
  out << "outer.family=" << to_string(model.outer().family) << '\n';
  out << "outer.theta=" << format_real(model.outer().theta) << '\n';
  out << "embedding=" << to_string(model.embedder().method()) << '\n';
  out << "lambda=" << format_real(model.lambda()) << '\n';
  out << "jitter=" << format_real(model.jitter_used()) << '\n';
  out << "bags=" << model.size() << '\n';
  out << "output_dim=" << model.output_dim() << '\n';
  for (const auto& p : bag_paths) out << "bag=" << fs::absolute(p).lexically_normal().string() << '\n';
  out << "duals\n";
  for (Eigen::Index r = 0; r < model.duals().rows(); ++r) {
    for (Eigen::Index c = 0; c < model.duals().cols(); ++c) out << (c ? "," : "") << format_real(model.duals()(r, c));
    out << '\n';
  }
}

TrainedModel load_model(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kModelHeader)
    throw DataError(path.string() + ": missing '" + kModelHeader + "' header");
  BaseKernelSpec base;
  OuterKernelSpec outer;
  EmbeddingMethod method = EmbeddingMethod::exact;
  double lambda = 0.0, jitter = 0.0;
  Eigen::Index l = -1, d = -1;
  std::vector<fs::path> bag_paths;
  try {
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      if (line == "duals") break;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DataError(path.string() + ": bad line '" + line + "'");
      const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "base.family") base.family = parse_base_family(value);
      else if (key == "base.bandwidth") base.bandwidth = parse_real(value);
      else if (key == "outer.family") outer.family = parse_outer_family(value);
      else if (key == "outer.theta") outer.theta = parse_real(value);
      else if (key == "embedding") method = parse_embedding_method(value);
      else if (key == "lambda") lambda = parse_real(value);
      else if (key == "jitter") jitter = parse_real(value);
      else if (key == "bags") l = std::stol(value);
      else if (key == "output_dim") d = std::stol(value);
      else if (key == "bag") bag_paths.emplace_back(value);
      else throw DataError(path.string() + ": unknown key '" + key + "'");
    }
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (l < 1 || d < 1 || static_cast<Eigen::Index>(bag_paths.size()) != l)
    throw DataError(path.string() + ": inconsistent bag count");
  Eigen::MatrixXd duals(l, d);
  for (Eigen::Index r = 0; r < l; ++r) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": truncated dual matrix");
    const auto fields = split_csv(trim(line));
    if (static_cast<Eigen::Index>(fields.size()) != d) throw DataError(path.string() + ": bad dual row");
    for (Eigen::Index c = 0; c < d; ++c) duals(r, c) = parse_real(fields[static_cast<std::size_t>(c)]);
  }
  std::vector<PointBag> bags;
  for (const auto& p : bag_paths) bags.push_back(read_bag_csv(p));
  auto embedder = std::make_shared<const Embedder>(base, std::move(bags), method);
  return TrainedModel(std::move(embedder), outer, lambda, std::move(duals), jitter);
}

}  // namespace merr
