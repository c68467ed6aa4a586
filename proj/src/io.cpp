#include "msband/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace msband::io {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'B', 'D'};
constexpr std::uint32_t kBinaryVersion = 1;

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return in;
}

// Strict cell parser: the whole trimmed field must consume as one double.
double parse_cell(const std::string& field, const std::string& path, int line,
                  int column) {
  std::string trimmed = field;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ' ||
                              trimmed.back() == '\t')) {
    trimmed.pop_back();
  }
  std::size_t begin = 0;
  while (begin < trimmed.size() &&
         (trimmed[begin] == ' ' || trimmed[begin] == '\t')) {
    ++begin;
  }
  trimmed = trimmed.substr(begin);
  const char* text = trimmed.c_str();
  char* end = nullptr;
  double value = std::strtod(text, &end);
  if (trimmed.empty() || end != text + trimmed.size()) {
    throw Error(ErrorCode::NonNumericCell,
                path + ":" + std::to_string(line) + ":" +
                    std::to_string(column) + ": not a number: '" + field + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

// Rows of doubles from a CSV file; every row must have the same width.
std::vector<std::vector<double>> load_csv_rows(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row.push_back(parse_cell(fields[c], path, line_no, static_cast<int>(c + 1)));
    }
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": row has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::ParseError, path + ": no rows");
  }
  return rows;
}

void write_matrix_csv(const Eigen::MatrixXd& matrix, const std::string& path) {
  std::ofstream out = open_out(path, std::ios::out);
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(matrix(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return matrix;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out = open_out(path, std::ios::out);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::ParseError, path + ": invalid json");
  }
  return j;
}

void save_psd_spec(const PsdSpec& spec, const std::string& path) {
  save_json(spec.to_json(), path);
}

PsdSpec load_psd_spec(const std::string& path, int source_index) {
  try {
    return PsdSpec::from_json(load_json(path), source_index);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    throw;
  }
}

void save_ensemble_csv(const SignalEnsemble& ensemble, const std::string& path) {
  write_matrix_csv(ensemble.samples, path);
}

SignalEnsemble load_ensemble_csv(const std::string& path, SignalRole role) {
  SignalEnsemble out;
  out.role = role;
  out.samples = rows_to_matrix(load_csv_rows(path));
  return out;
}

void save_ensemble_binary(const SignalEnsemble& ensemble,
                          const std::string& path) {
  std::ofstream out = open_out(path, std::ios::binary);
  std::uint32_t role = static_cast<std::uint32_t>(ensemble.role);
  std::int64_t channels = ensemble.channels();
  std::int64_t length = ensemble.length();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&kBinaryVersion), 4);
  out.write(reinterpret_cast<const char*>(&role), 4);
  out.write(reinterpret_cast<const char*>(&channels), 8);
  out.write(reinterpret_cast<const char*>(&length), 8);
  for (Eigen::Index r = 0; r < ensemble.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < ensemble.samples.cols(); ++c) {
      double v = ensemble.samples(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

SignalEnsemble load_ensemble_binary(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[4];
  std::uint32_t version = 0;
  std::uint32_t role = 0;
  std::int64_t channels = 0;
  std::int64_t length = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&role), 4);
  in.read(reinterpret_cast<char*>(&channels), 8);
  in.read(reinterpret_cast<char*>(&length), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::ParseError, path + ": not an ensemble file");
  }
  if (version != kBinaryVersion) {
    throw Error(ErrorCode::ParseError,
                path + ": unsupported version " + std::to_string(version));
  }
  if (role > 2 || channels < 1 || length < 1) {
    throw Error(ErrorCode::ParseError, path + ": corrupt header");
  }
  SignalEnsemble out;
  out.role = static_cast<SignalRole>(role);
  out.samples.resize(channels, length);
  for (std::int64_t r = 0; r < channels; ++r) {
    for (std::int64_t c = 0; c < length; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), 8);
      out.samples(r, c) = v;
    }
  }
  if (!in) throw Error(ErrorCode::ParseError, path + ": truncated payload");
  return out;
}

void save_mixing_csv(const MixingMatrix& mixing, const std::string& path) {
  write_matrix_csv(mixing.matrix(), path);
}

MixingMatrix load_mixing_csv(const std::string& path) {
  return MixingMatrix(rows_to_matrix(load_csv_rows(path)));
}

void save_sample_set(const SampleSet& samples, const std::string& path) {
  nlohmann::json j;
  j["T"] = samples.length;
  j["N"] = samples.channels;
  j["subbands"] = nlohmann::json::array();
  for (const auto& band : samples.bands) {
    nlohmann::json jb;
    jb["l"] = band.subband;
    jb["rows"] = band.rows;
    jb["times"] = band.times;
    nlohmann::json values = nlohmann::json::array();
    for (Eigen::Index i = 0; i < band.values.rows(); ++i) {
      for (Eigen::Index t = 0; t < band.values.cols(); ++t) {
        values.push_back({band.values(i, t).real(), band.values(i, t).imag()});
      }
    }
    jb["values"] = std::move(values);
    j["subbands"].push_back(std::move(jb));
  }
  save_json(j, path);
}

SampleSet load_sample_set(const std::string& path) {
  nlohmann::json j = load_json(path);
  if (!j.contains("T") || !j.contains("N") || !j.contains("subbands")) {
    throw Error(ErrorCode::ParseError,
                path + ": sample set needs fields T, N, subbands");
  }
  SampleSet out;
  out.length = j["T"].get<int>();
  out.channels = j["N"].get<int>();
  for (const auto& jb : j["subbands"]) {
    if (!jb.contains("l") || !jb.contains("rows") || !jb.contains("times") ||
        !jb.contains("values")) {
      throw Error(ErrorCode::ParseError,
                  path + ": subband needs fields l, rows, times, values");
    }
    SampleBand band;
    band.subband = jb["l"].get<int>();
    band.rows = jb["rows"].get<std::vector<int>>();
    band.times = jb["times"].get<std::vector<int>>();
    const auto& values = jb["values"];
    if (values.size() != band.rows.size() * band.times.size()) {
      throw Error(ErrorCode::ParseError,
                  path + ": subband " + std::to_string(band.subband) +
                      " has " + std::to_string(values.size()) +
                      " values, expected " +
                      std::to_string(band.rows.size() * band.times.size()));
    }
    band.values.resize(band.rows.size(), band.times.size());
    std::size_t index = 0;
    for (std::size_t i = 0; i < band.rows.size(); ++i) {
      for (std::size_t t = 0; t < band.times.size(); ++t, ++index) {
        const auto& pair = values[index];
        if (!pair.is_array() || pair.size() != 2) {
          throw Error(ErrorCode::ParseError,
                      path + ": values must be [re, im] pairs");
        }
        band.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = {
            pair[0].get<double>(), pair[1].get<double>()};
      }
    }
    out.bands.push_back(std::move(band));
  }
  return out;
}

Eigen::MatrixXd load_series_matrix(const std::string& path, int columns,
                                   int rows) {
  if (columns < 1 || rows < 1) {
    throw Error(ErrorCode::DomainError, "need positive series and length counts");
  }
  namespace fs = std::filesystem;
  if (!fs::exists(path)) {
    throw Error(ErrorCode::IoError, path + ": no such file or directory");
  }

  std::vector<std::vector<double>> series;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (static_cast<int>(files.size()) < columns) {
      throw Error(ErrorCode::InsufficientData,
                  path + ": found " + std::to_string(files.size()) +
                      " series files, need " + std::to_string(columns));
    }
    for (int i = 0; i < columns; ++i) {
      auto file_rows = load_csv_rows(files[static_cast<std::size_t>(i)]);
      if (file_rows.front().size() != 1) {
        throw Error(ErrorCode::ParseError,
                    files[static_cast<std::size_t>(i)] +
                        ": expected a single column per series file");
      }
      std::vector<double> column;
      column.reserve(file_rows.size());
      for (const auto& row : file_rows) column.push_back(row[0]);
      series.push_back(std::move(column));
    }
  } else {
    auto file_rows = load_csv_rows(path);
    if (static_cast<int>(file_rows.front().size()) < columns) {
      throw Error(ErrorCode::InsufficientData,
                  path + ": has " + std::to_string(file_rows.front().size()) +
                      " columns, need " + std::to_string(columns));
    }
    series.assign(static_cast<std::size_t>(columns), {});
    for (auto& s : series) s.reserve(file_rows.size());
    for (const auto& row : file_rows) {
      for (int c = 0; c < columns; ++c) {
        series[static_cast<std::size_t>(c)].push_back(
            row[static_cast<std::size_t>(c)]);
      }
    }
  }

  Eigen::MatrixXd out(columns, rows);
  for (int c = 0; c < columns; ++c) {
    if (static_cast<int>(series[static_cast<std::size_t>(c)].size()) < rows) {
      throw Error(ErrorCode::InsufficientData,
                  path + ": series " + std::to_string(c) + " has " +
                      std::to_string(series[static_cast<std::size_t>(c)].size()) +
                      " samples, need " + std::to_string(rows));
    }
    for (int t = 0; t < rows; ++t) {
      out(c, t) = series[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
    }
  }
  return out;
}

}  // namespace msband::io
