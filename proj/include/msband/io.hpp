#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "msband/sampling.hpp"
#include "msband/spectrum.hpp"
#include "msband/synthesis.hpp"

namespace msband::io {

// All numeric text is written with "%.17g" so emitted files are bit-stable
// across runs and round-trip to the same doubles.
std::string format_double(double value);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

void save_psd_spec(const PsdSpec& spec, const std::string& path);
PsdSpec load_psd_spec(const std::string& path, int source_index = 0);

// CSV: one row per channel, comma-separated, no header.
void save_ensemble_csv(const SignalEnsemble& ensemble, const std::string& path);
SignalEnsemble load_ensemble_csv(const std::string& path, SignalRole role);

// Binary: "MSBD" magic, version, role, channel and window counts, then
// row-major doubles, all little-endian.
void save_ensemble_binary(const SignalEnsemble& ensemble, const std::string& path);
SignalEnsemble load_ensemble_binary(const std::string& path);

void save_mixing_csv(const MixingMatrix& mixing, const std::string& path);
MixingMatrix load_mixing_csv(const std::string& path);

// JSON with fields T, N, and subbands; each subband holds its plan index,
// selected rows, instants, and row-major [re, im] value pairs.
void save_sample_set(const SampleSet& samples, const std::string& path);
SampleSet load_sample_set(const std::string& path);

// Measured-series loader.  A directory is read as one single-column CSV per
// series (sorted by filename); a file is read as one wide CSV with one
// column per series.  The first `columns` series and first `rows` instants
// are kept; anything non-numeric fails with the exact cell location.
Eigen::MatrixXd load_series_matrix(const std::string& path, int columns,
                                   int rows);

}  // namespace msband::io
