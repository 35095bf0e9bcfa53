#include "tilestream/embedding_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tilestream/errors.hpp"

namespace tilestream::eval {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const fs::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::ParseError, path.string() + ": truncated embedding file");
  }
  return value;
}

}  // namespace

void write_embeddings(const fs::path& path, const LabeledEmbeddings& data) {
  data.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const auto n = static_cast<std::uint64_t>(data.X.rows());
  const auto d = static_cast<std::uint64_t>(data.X.cols());
  const auto g = static_cast<std::uint64_t>(data.targets.rows() > 0 ? data.targets.cols() : 0);
  std::uint32_t flags = 0;
  if (!data.labels.empty()) flags |= kHasLabels;
  if (!data.patient_ids.empty()) flags |= kHasPatients;
  if (!data.splits.empty()) flags |= kHasSplits;

  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  put(out, n);
  put(out, d);
  put(out, g);
  put(out, flags);
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) put(out, static_cast<float>(data.X(i, j)));
  }
  if (flags & kHasLabels) {
    for (int y : data.labels) put(out, static_cast<std::int32_t>(y));
  }
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(g ? n : 0); ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(g); ++j) {
      put(out, static_cast<float>(data.targets(i, j)));
    }
  }
  if (flags & kHasPatients) {
    for (const auto& p : data.patient_ids) {
      put(out, static_cast<std::uint32_t>(p.size()));
      out.write(p.data(), static_cast<std::streamsize>(p.size()));
    }
  }
  if (flags & kHasSplits) {
    for (Split s : data.splits) put(out, static_cast<std::uint8_t>(s));
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

LabeledEmbeddings read_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kEmbeddingMagic, 8) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + ": bad embedding magic");
  }
  const auto n = get<std::uint64_t>(in, path);
  const auto d = get<std::uint64_t>(in, path);
  const auto g = get<std::uint64_t>(in, path);
  const auto flags = get<std::uint32_t>(in, path);
  // Guard against absurd headers before allocating.
  const auto file_size = fs::file_size(path);
  if (n * d > file_size || n * g > file_size) {
    throw Error(ErrorCode::ParseError, path.string() + ": header sizes exceed file size");
  }

  LabeledEmbeddings data;
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) data.X(i, j) = get<float>(in, path);
  }
  if (flags & kHasLabels) {
    data.labels.resize(n);
    for (auto& y : data.labels) y = get<std::int32_t>(in, path);
  }
  if (g > 0) {
    data.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g));
    for (Eigen::Index i = 0; i < data.targets.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.targets.cols(); ++j) {
        data.targets(i, j) = get<float>(in, path);
      }
    }
  }
  if (flags & kHasPatients) {
    data.patient_ids.resize(n);
    for (auto& p : data.patient_ids) {
      const auto len = get<std::uint32_t>(in, path);
      if (len > file_size) throw Error(ErrorCode::ParseError, path.string() + ": bad id length");
      p.resize(len);
      if (!in.read(p.data(), len)) {
        throw Error(ErrorCode::ParseError, path.string() + ": truncated patient id");
      }
    }
  }
  if (flags & kHasSplits) {
    data.splits.resize(n);
    for (auto& s : data.splits) {
      const auto v = get<std::uint8_t>(in, path);
      if (v > 2) throw Error(ErrorCode::ParseError, path.string() + ": bad split tag");
      s = static_cast<Split>(v);
    }
  }
  data.validate();
  return data;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Split parse_split(const std::string& s, std::size_t line) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": unknown split '" + s + "'");
}

}  // namespace

LabeledEmbeddings read_embeddings_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path.string() + ": empty CSV");
  const auto header = split_csv(line);

  int label_col = -1, patient_col = -1, split_col = -1;
  std::map<int, int> feature_cols, target_cols;  // index -> column
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "label") label_col = c;
    else if (h == "patient_id") patient_col = c;
    else if (h == "split") split_col = c;
    else if (h.size() > 1 && (h[0] == 'f' || h[0] == 't') &&
             std::all_of(h.begin() + 1, h.end(), ::isdigit)) {
      (h[0] == 'f' ? feature_cols : target_cols)[std::stoi(h.substr(1))] = c;
    } else {
      throw Error(ErrorCode::ParseError, "line 1: unknown column '" + h + "'");
    }
  }
  if (feature_cols.empty()) throw Error(ErrorCode::ParseError, "line 1: no feature columns");

  std::vector<std::vector<double>> feats, targs;
  LabeledEmbeddings data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " columns");
    }
    try {
      std::vector<double> f, t;
      for (const auto& [idx, col] : feature_cols) f.push_back(std::stod(cells[col]));
      for (const auto& [idx, col] : target_cols) t.push_back(std::stod(cells[col]));
      feats.push_back(std::move(f));
      if (!t.empty()) targs.push_back(std::move(t));
      if (label_col >= 0) data.labels.push_back(std::stoi(cells[label_col]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number");
    }
    if (patient_col >= 0) data.patient_ids.push_back(cells[patient_col]);
    if (split_col >= 0) data.splits.push_back(parse_split(cells[split_col], line_no));
  }

  data.X.resize(static_cast<Eigen::Index>(feats.size()),
                static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (std::size_t j = 0; j < feats[i].size(); ++j) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feats[i][j];
    }
  }
  if (!targs.empty()) {
    data.targets.resize(static_cast<Eigen::Index>(targs.size()),
                        static_cast<Eigen::Index>(target_cols.size()));
    for (std::size_t i = 0; i < targs.size(); ++i) {
      for (std::size_t j = 0; j < targs[i].size(); ++j) {
        data.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = targs[i][j];
      }
    }
  }
  data.validate();
  return data;
}

void write_report(const fs::path& path, const std::vector<TaskReport>& reports) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& r : reports) {
    root[r.task] = {{"metric", r.metric},
                    {"mean", r.result.mean},
                    {"std_of_mean", r.result.std_of_mean},
                    {"runs", r.result.runs},
                    {"single_run", r.result.single_run}};
  }
  std::ofstream out(path, std::ios::trunc);
  if (!(out << root.dump(2) << '\n')) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace tilestream::eval
